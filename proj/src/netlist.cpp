#include "lockforge/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace lf {

const char* gate_kind_name(GateKind k) {
    switch (k) {
        case GateKind::And: return "AND";
        case GateKind::Nand: return "NAND";
        case GateKind::Or: return "OR";
        case GateKind::Nor: return "NOR";
        case GateKind::Xor: return "XOR";
        case GateKind::Xnor: return "XNOR";
        case GateKind::Inv: return "NOT";
        case GateKind::Buf: return "BUF";
    }
    return "?";
}

std::optional<GateKind> gate_kind_from_name(std::string_view name) {
    std::string up;
    up.reserve(name.size());
    for (char ch : name) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    if (up == "AND") return GateKind::And;
    if (up == "NAND") return GateKind::Nand;
    if (up == "OR") return GateKind::Or;
    if (up == "NOR") return GateKind::Nor;
    if (up == "XOR") return GateKind::Xor;
    if (up == "XNOR") return GateKind::Xnor;
    if (up == "NOT" || up == "INV") return GateKind::Inv;
    if (up == "BUF" || up == "BUFF") return GateKind::Buf;
    return std::nullopt;
}

bool is_inverting(GateKind k) {
    return k == GateKind::Nand || k == GateKind::Nor || k == GateKind::Inv || k == GateKind::Xnor;
}

std::optional<int> key_input_index(std::string_view name) {
    constexpr std::string_view prefix = "keyinput";
    if (name.size() <= prefix.size()) return std::nullopt;
    for (size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(name[i])) != prefix[i]) return std::nullopt;
    }
    int idx = 0;
    auto [p, ec] = std::from_chars(name.data() + prefix.size(), name.data() + name.size(), idx);
    if (ec != std::errc{} || p != name.data() + name.size()) return std::nullopt;
    return idx;
}

// ---------------------------------------------------------------------------
// CircuitBuilder

NetId CircuitBuilder::net(std::string_view name) {
    auto it = ids_.find(std::string(name));
    if (it != ids_.end()) return it->second;
    NetId id = static_cast<NetId>(net_names_.size());
    net_names_.emplace_back(name);
    ids_.emplace(std::string(name), id);
    is_in_.push_back(0);
    is_out_.push_back(0);
    return id;
}

void CircuitBuilder::mark_input(NetId n) { is_in_[n] = 1; }
void CircuitBuilder::mark_output(NetId n) {
    if (!is_out_[n]) out_order_.push_back(n);
    is_out_[n] = 1;
}

void CircuitBuilder::add_gate(GateKind kind, NetId out, std::vector<NetId> ins) {
    if (kind == GateKind::Inv || kind == GateKind::Buf) {
        if (ins.size() != 1)
            throw CircuitError(gate_kind_name(kind) + std::string(" gate '") + net_names_[out] +
                               "' must have exactly 1 input");
    } else if (ins.size() < 2) {
        throw CircuitError(gate_kind_name(kind) + std::string(" gate '") + net_names_[out] +
                           "' needs at least 2 inputs");
    }
    gates_.push_back(Gate{kind, out, std::move(ins)});
}

Circuit CircuitBuilder::build() {
    Circuit c;
    c.name = name_;
    c.net_names_ = net_names_;
    c.ids_ = ids_;
    const int n = static_cast<int>(net_names_.size());
    c.driver_.assign(n, -1);
    c.output_mark_.assign(n, 0);
    c.role_.assign(n, Circuit::Role::Internal);

    for (size_t g = 0; g < gates_.size(); ++g) {
        NetId out = gates_[g].out;
        if (is_in_[out])
            throw CircuitError("net '" + net_names_[out] + "' is declared INPUT but also driven by a gate");
        if (c.driver_[out] != -1)
            throw CircuitError("net '" + net_names_[out] + "' has multiple drivers");
        c.driver_[out] = static_cast<int>(g);
    }
    for (NetId i = 0; i < n; ++i) {
        if (!is_in_[i] && c.driver_[i] == -1)
            throw CircuitError("net '" + net_names_[i] + "' is undriven (no INPUT declaration and no gate)");
    }

    // Topological sort over gates; any leftover gate sits on a cycle.
    std::vector<int> order;
    order.reserve(gates_.size());
    std::vector<int> pending(gates_.size(), 0);
    std::vector<std::vector<int>> net_waiters(n);
    std::vector<int> ready;
    std::vector<uint8_t> net_done(n, 0);
    for (NetId i = 0; i < n; ++i)
        if (is_in_[i]) net_done[i] = 1;
    for (size_t g = 0; g < gates_.size(); ++g) {
        for (NetId in : gates_[g].ins)
            if (!net_done[in]) {
                ++pending[g];
                net_waiters[in].push_back(static_cast<int>(g));
            }
        if (pending[g] == 0) ready.push_back(static_cast<int>(g));
    }
    // Lowest declaration index first keeps the order stable, so emitting
    // and re-parsing a netlist is a fixpoint.
    std::make_heap(ready.begin(), ready.end(), std::greater<>());
    while (!ready.empty()) {
        std::pop_heap(ready.begin(), ready.end(), std::greater<>());
        int g = ready.back();
        ready.pop_back();
        order.push_back(g);
        NetId out = gates_[g].out;
        net_done[out] = 1;
        for (int w : net_waiters[out])
            if (--pending[w] == 0) {
                ready.push_back(w);
                std::push_heap(ready.begin(), ready.end(), std::greater<>());
            }
    }
    if (order.size() != gates_.size())
        throw CircuitError("circuit '" + name_ + "' contains a combinational loop");

    // Renumber gates in topological order.
    c.gates_.reserve(gates_.size());
    for (int g : order) c.gates_.push_back(std::move(gates_[g]));
    for (size_t g = 0; g < c.gates_.size(); ++g) c.driver_[c.gates_[g].out] = static_cast<int>(g);

    c.fanouts_.assign(n, {});
    for (size_t g = 0; g < c.gates_.size(); ++g)
        for (NetId in : c.gates_[g].ins) c.fanouts_[in].push_back(static_cast<int>(g));

    // PI/KI classification; key inputs ordered by their keyinput index.
    std::vector<std::pair<int, NetId>> keys;
    for (NetId i = 0; i < n; ++i) {
        if (!is_in_[i]) continue;
        if (auto idx = key_input_index(net_names_[i])) {
            c.role_[i] = Circuit::Role::Ki;
            keys.emplace_back(*idx, i);
        } else {
            c.role_[i] = Circuit::Role::Pi;
            c.inputs_.push_back(i);
        }
    }
    std::sort(keys.begin(), keys.end());
    for (auto& [idx, net] : keys) c.key_inputs_.push_back(net);

    // PO order follows mark order, so cloning builders keep it stable
    for (NetId i : out_order_) {
        c.output_mark_[i] = 1;
        c.outputs_.push_back(i);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Circuit queries

std::optional<NetId> Circuit::find_net(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

NetId Circuit::net(std::string_view name) const {
    auto id = find_net(name);
    if (!id) throw CircuitError("unknown net '" + std::string(name) + "'");
    return *id;
}

std::vector<NetId> Circuit::startpoints(NetId n) const {
    std::vector<uint8_t> seen(num_nets(), 0);
    std::vector<NetId> stack{n}, result;
    seen[n] = 1;
    while (!stack.empty()) {
        NetId cur = stack.back();
        stack.pop_back();
        if (role_[cur] != Role::Internal) {
            result.push_back(cur);
            continue;
        }
        for (NetId in : gates_[driver_[cur]].ins)
            if (!seen[in]) {
                seen[in] = 1;
                stack.push_back(in);
            }
    }
    std::sort(result.begin(), result.end());
    return result;
}

std::vector<NetId> Circuit::endpoints(NetId n) const {
    std::vector<uint8_t> seen(num_nets(), 0);
    std::vector<NetId> stack{n}, result;
    seen[n] = 1;
    while (!stack.empty()) {
        NetId cur = stack.back();
        stack.pop_back();
        if (output_mark_[cur]) result.push_back(cur);
        for (int g : fanouts_[cur]) {
            NetId out = gates_[g].out;
            if (!seen[out]) {
                seen[out] = 1;
                stack.push_back(out);
            }
        }
    }
    std::sort(result.begin(), result.end());
    return result;
}

std::vector<NetId> Circuit::net_conn(NetId o) const {
    NetId roots[1] = {o};
    return net_conn(std::span<const NetId>(roots, 1));
}

std::vector<NetId> Circuit::net_conn(std::span<const NetId> pos) const {
    std::vector<uint8_t> in_cone(num_nets(), 0);
    std::vector<NetId> stack(pos.begin(), pos.end());
    for (NetId o : pos) in_cone[o] = 1;
    while (!stack.empty()) {
        NetId cur = stack.back();
        stack.pop_back();
        if (role_[cur] != Role::Internal)
            continue;
        for (NetId in : gates_[driver_[cur]].ins)
            if (!in_cone[in]) {
                in_cone[in] = 1;
                stack.push_back(in);
            }
    }
    // Emit in the circuit's global topological order: inputs first, then
    // gate outputs in gate order.
    std::vector<NetId> result;
    for (NetId i = 0; i < num_nets(); ++i)
        if (in_cone[i] && role_[i] != Role::Internal) result.push_back(i);
    for (const Gate& g : gates_)
        if (in_cone[g.out]) result.push_back(g.out);
    return result;
}

std::vector<int> Circuit::fanout_cells(NetId n) const {
    std::vector<uint8_t> seen(num_nets(), 0);
    std::vector<NetId> stack{n};
    seen[n] = 1;
    std::vector<uint8_t> gate_in(gates_.size(), 0);
    while (!stack.empty()) {
        NetId cur = stack.back();
        stack.pop_back();
        for (int g : fanouts_[cur]) {
            gate_in[g] = 1;
            NetId out = gates_[g].out;
            if (!seen[out]) {
                seen[out] = 1;
                stack.push_back(out);
            }
        }
    }
    std::vector<int> result;
    for (size_t g = 0; g < gates_.size(); ++g)
        if (gate_in[g]) result.push_back(static_cast<int>(g));
    return result;  // gate indices are already topological
}

const Gate& Circuit::gate_conn(NetId n) const {
    if (fanouts_[n].empty())
        throw CircuitError("net '" + net_names_[n] + "' has empty fanout");
    return gates_[fanouts_[n].front()];
}

Circuit Circuit::extract_cone(NetId n) const {
    NetId roots[1] = {n};
    return extract_cone(std::span<const NetId>(roots, 1));
}

Circuit Circuit::extract_cone(std::span<const NetId> roots) const {
    std::vector<NetId> cone = net_conn(roots);
    CircuitBuilder b(name + "_cone");
    for (NetId n : cone) {
        NetId nn = b.net(net_names_[n]);
        if (role_[n] != Role::Internal) b.mark_input(nn);
    }
    std::vector<uint8_t> in_cone(num_nets(), 0);
    for (NetId n : cone) in_cone[n] = 1;
    for (const Gate& g : gates_) {
        if (!in_cone[g.out] || role_[g.out] != Role::Internal) continue;
        std::vector<NetId> ins;
        ins.reserve(g.ins.size());
        for (NetId in : g.ins) ins.push_back(b.net(net_names_[in]));
        b.add_gate(g.kind, b.net(net_names_[g.out]), std::move(ins));
    }
    for (NetId r : roots) b.mark_output(b.net(net_names_[r]));
    return b.build();
}

std::vector<int> Circuit::logic_levels() const {
    std::vector<int> level(num_nets(), 0);
    for (const Gate& g : gates_) {
        int m = 0;
        for (NetId in : g.ins) m = std::max(m, level[in]);
        level[g.out] = m + 1;
    }
    return level;
}

std::vector<NetId> Circuit::pi_ki_order() const {
    std::vector<NetId> ports = inputs_;
    ports.insert(ports.end(), key_inputs_.begin(), key_inputs_.end());
    return ports;
}

int Circuit::get_index(NetId n, std::span<const NetId> ports) const {
    for (size_t i = 0; i < ports.size(); ++i)
        if (ports[i] == n) return static_cast<int>(i);
    return -1;
}

// ---------------------------------------------------------------------------
// BENCH parser / emitter

namespace {

struct Line {
    int number;
    std::string text;
};

[[noreturn]] void parse_fail(int line, const std::string& msg) {
    throw CircuitError("line " + std::to_string(line) + ": " + msg);
}

std::string strip(std::string_view s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

}  // namespace

Circuit parse_bench(std::string_view text, std::string name) {
    CircuitBuilder b(std::move(name));
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::string line = strip(raw);
        if (line.empty()) continue;

        auto open = line.find('(');
        auto eq = line.find('=');
        if (eq == std::string::npos || (open != std::string::npos && open < eq)) {
            // INPUT(x) / OUTPUT(x)
            auto close = line.rfind(')');
            if (open == std::string::npos || close == std::string::npos || close < open)
                parse_fail(lineno, "expected INPUT(net), OUTPUT(net) or net = GATE(...)");
            std::string kw = strip(line.substr(0, open));
            std::string arg = strip(line.substr(open + 1, close - open - 1));
            if (arg.empty()) parse_fail(lineno, "empty port name");
            std::string up;
            for (char ch : kw) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
            if (up == "INPUT")
                b.mark_input(b.net(arg));
            else if (up == "OUTPUT")
                b.mark_output(b.net(arg));
            else
                parse_fail(lineno, "unknown directive '" + kw + "'");
            continue;
        }
        std::string out = strip(line.substr(0, eq));
        if (out.empty()) parse_fail(lineno, "missing net name before '='");
        std::string rhs = strip(line.substr(eq + 1));
        open = rhs.find('(');
        auto close = rhs.rfind(')');
        if (open == std::string::npos || close == std::string::npos || close < open)
            parse_fail(lineno, "malformed gate expression '" + rhs + "'");
        std::string gname = strip(rhs.substr(0, open));
        auto kind = gate_kind_from_name(gname);
        if (!kind) parse_fail(lineno, "unknown gate type '" + gname + "'");
        std::vector<NetId> ins;
        std::string args = rhs.substr(open + 1, close - open - 1);
        size_t pos = 0;
        while (pos <= args.size()) {
            size_t comma = args.find(',', pos);
            std::string tok = strip(comma == std::string::npos ? args.substr(pos)
                                                               : args.substr(pos, comma - pos));
            if (tok.empty()) parse_fail(lineno, "empty operand in gate '" + out + "'");
            ins.push_back(b.net(tok));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        try {
            b.add_gate(*kind, b.net(out), std::move(ins));
        } catch (const CircuitError& e) {
            parse_fail(lineno, e.what());
        }
    }
    return b.build();
}

std::string emit_bench(const Circuit& c) {
    std::ostringstream out;
    out << "# " << c.name << "\n";
    for (NetId n : c.inputs()) out << "INPUT(" << c.net_name(n) << ")\n";
    for (NetId n : c.key_inputs()) out << "INPUT(" << c.net_name(n) << ")\n";
    for (NetId n : c.outputs()) out << "OUTPUT(" << c.net_name(n) << ")\n";
    for (const Gate& g : c.gates()) {
        out << c.net_name(g.out) << " = " << gate_kind_name(g.kind) << "(";
        for (size_t i = 0; i < g.ins.size(); ++i) {
            if (i) out << ", ";
            out << c.net_name(g.ins[i]);
        }
        out << ")\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Structural Verilog subset

namespace {

struct VTokenizer {
    std::string_view src;
    size_t pos = 0;
    int line = 1;

    void skip_ws() {
        while (pos < src.size()) {
            char ch = src[pos];
            if (ch == '\n') { ++line; ++pos; }
            else if (std::isspace(static_cast<unsigned char>(ch))) ++pos;
            else if (ch == '/' && pos + 1 < src.size() && src[pos + 1] == '/') {
                while (pos < src.size() && src[pos] != '\n') ++pos;
            } else if (ch == '/' && pos + 1 < src.size() && src[pos + 1] == '*') {
                pos += 2;
                while (pos + 1 < src.size() && !(src[pos] == '*' && src[pos + 1] == '/')) {
                    if (src[pos] == '\n') ++line;
                    ++pos;
                }
                pos += 2;
            } else break;
        }
    }

    std::string next() {
        skip_ws();
        if (pos >= src.size()) return {};
        char ch = src[pos];
        if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '\\' || ch == '[') {
            size_t start = pos;
            while (pos < src.size()) {
                char d = src[pos];
                if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '\\' ||
                    d == '[' || d == ']' || d == '$')
                    ++pos;
                else break;
            }
            return std::string(src.substr(start, pos - start));
        }
        ++pos;
        return std::string(1, ch);
    }

    std::string peek() {
        size_t save_pos = pos;
        int save_line = line;
        std::string t = next();
        pos = save_pos;
        line = save_line;
        return t;
    }
};

}  // namespace

Circuit parse_structural_verilog(std::string_view text) {
    VTokenizer tz{text};
    std::string tok = tz.next();
    if (tok != "module")
        throw CircuitError("line " + std::to_string(tz.line) + ": expected 'module'");
    std::string mod_name = tz.next();
    CircuitBuilder b(mod_name);

    // Header port list (names only).
    tok = tz.next();
    if (tok == "(") {
        while (true) {
            tok = tz.next();
            if (tok == ")") break;
            if (tok == "," || tok.empty()) continue;
        }
        tok = tz.next();
    }
    if (tok != ";")
        throw CircuitError("line " + std::to_string(tz.line) + ": expected ';' after module header");

    while (true) {
        tok = tz.next();
        if (tok.empty())
            throw CircuitError("unexpected end of file, missing 'endmodule'");
        if (tok == "endmodule") break;
        if (tok == "input" || tok == "output" || tok == "wire") {
            std::string kind = tok;
            while (true) {
                std::string id = tz.next();
                if (id == ";") break;
                if (id == ",") continue;
                if (id == "[")
                    throw CircuitError("line " + std::to_string(tz.line) +
                                       ": unsupported construct 'vector declaration'");
                NetId n = b.net(id);
                if (kind == "input") b.mark_input(n);
                if (kind == "output") b.mark_output(n);
            }
            continue;
        }
        if (tok == "assign" || tok == "always" || tok == "reg" || tok == "initial")
            throw CircuitError("line " + std::to_string(tz.line) + ": unsupported construct '" + tok + "'");
        auto kind = gate_kind_from_name(tok);
        if (!kind)
            throw CircuitError("line " + std::to_string(tz.line) + ": unsupported construct '" + tok + "'");
        std::string inst = tz.next();  // instance name (or '(' when anonymous)
        if (inst != "(") {
            std::string open = tz.next();
            if (open != "(")
                throw CircuitError("line " + std::to_string(tz.line) + ": expected '(' after instance name");
        }
        std::vector<NetId> conns;
        while (true) {
            std::string id = tz.next();
            if (id == ")") break;
            if (id == ",") continue;
            conns.push_back(b.net(id));
        }
        if (tz.next() != ";")
            throw CircuitError("line " + std::to_string(tz.line) + ": expected ';' after instantiation");
        if (conns.size() < 2)
            throw CircuitError("line " + std::to_string(tz.line) + ": gate instance needs output and inputs");
        NetId out = conns.front();
        conns.erase(conns.begin());
        b.add_gate(*kind, out, std::move(conns));
    }
    return b.build();
}

// ---------------------------------------------------------------------------

Circuit read_circuit_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CircuitError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    auto slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    if (auto dot = base.find_last_of('.'); dot != std::string::npos) {
        std::string ext = base.substr(dot + 1);
        base = base.substr(0, dot);
        if (ext == "v") return parse_structural_verilog(ss.str());
    }
    return parse_bench(ss.str(), base);
}

void write_bench_file(const Circuit& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CircuitError("cannot write '" + path + "'");
    out << emit_bench(c);
}

}  // namespace lf
