#pragma once

// Versioned tabular policy files for the look-up-table transmission phase.
//
//   # seeplan policy v1
//   kind,nonstationary            (or stationary)
//   stages,<K>                    (1 for stationary tables)
//   states,<N_S>
//   power_levels,<M>
//   stage,state,ps_idx,pd_idx,value
//   0,0,0,0,0
//   ...
//
// One data line per (stage, state) with a stored action.

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "seeplan/format.hpp"
#include "seeplan/planners.hpp"

namespace seeplan {

using AnyPolicy = std::variant<NonstationaryPolicy, StationaryPolicy>;

inline constexpr const char* kPolicyMagic = "# seeplan policy v1";

namespace detail {

inline std::size_t power_level_count(std::size_t actions) {
    std::size_t m = 0;
    while (m * m < actions) ++m;
    if (m * m != actions) throw ShapeError("action count is not a square of the power level count");
    return m;
}

inline void write_row(std::ostream& out, std::size_t stage, StateIndex s, ActionIndex a, std::size_t m, double v) {
    out << stage << ',' << s << ',' << a / m << ',' << a % m << ',' << format_double(v) << '\n';
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

inline void write_policy(std::ostream& out, const NonstationaryPolicy& policy) {
    const std::size_t m = detail::power_level_count(policy.action_count());
    out << kPolicyMagic << "\nkind,nonstationary\nstages," << policy.stages() << "\nstates," << policy.state_count()
        << "\npower_levels," << m << "\nstage,state,ps_idx,pd_idx,value\n";
    for (std::size_t k = 0; k < policy.stages(); ++k) {
        for (StateIndex s = 0; s < policy.state_count(); ++s) {
            if (auto a = policy.action_at(k, s)) detail::write_row(out, k, s, *a, m, policy.value(k, s));
        }
    }
}

inline void write_policy(std::ostream& out, const StationaryPolicy& policy) {
    const std::size_t m = detail::power_level_count(policy.action_count());
    out << kPolicyMagic << "\nkind,stationary\nstages,1\nstates," << policy.state_count() << "\npower_levels," << m
        << "\nstage,state,ps_idx,pd_idx,value\n";
    for (StateIndex s = 0; s < policy.state_count(); ++s) {
        if (auto a = policy.action_at(0, s)) detail::write_row(out, 0, s, *a, m, policy.value(s));
    }
}

inline void write_policy(std::ostream& out, const AnyPolicy& policy) {
    std::visit([&out](const auto& p) { write_policy(out, p); }, policy);
}

inline AnyPolicy read_policy(std::istream& in) {
    std::string line;
    auto expect_line = [&](const char* what) {
        if (!std::getline(in, line)) throw IoError(std::string("policy file truncated before ") + what);
        return line;
    };
    if (expect_line("header") != kPolicyMagic) throw IoError("not a seeplan v1 policy file");

    auto keyed = [&](const std::string& key) {
        const auto fields = detail::split_csv(expect_line(key.c_str()));
        if (fields.size() != 2 || fields[0] != key) throw IoError("expected '" + key + ",<value>' line");
        return fields[1];
    };
    const std::string kind = keyed("kind");
    const auto stages = parse_integer<std::size_t>(keyed("stages"));
    const auto states = parse_integer<std::size_t>(keyed("states"));
    const auto m = parse_integer<std::size_t>(keyed("power_levels"));
    if (expect_line("column header") != "stage,state,ps_idx,pd_idx,value") throw IoError("bad column header");
    if (kind != "nonstationary" && kind != "stationary") throw IoError("unknown policy kind '" + kind + "'");
    if (kind == "stationary" && stages != 1) throw IoError("stationary policy must have exactly one stage");

    NonstationaryPolicy ns(kind == "nonstationary" ? stages : 0, states, m * m);
    StationaryPolicy st(kind == "stationary" ? states : 0, m * m);
    std::size_t line_no = 6;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 5) throw IoError("line " + std::to_string(line_no) + ": expected 5 fields");
        const auto k = parse_integer<std::size_t>(f[0]);
        const auto s = parse_integer<StateIndex>(f[1]);
        const auto ps = parse_integer<std::size_t>(f[2]);
        const auto pd = parse_integer<std::size_t>(f[3]);
        const double v = parse_double(f[4]);
        if (k >= stages || s >= states || ps >= m || pd >= m) {
            throw IoError("line " + std::to_string(line_no) + ": index out of range");
        }
        if (kind == "nonstationary") {
            ns.set(k, s, ps * m + pd, v);
        } else {
            st.set(s, ps * m + pd, v);
        }
    }
    if (kind == "nonstationary") return ns;
    return st;
}

inline void save_policy(const std::string& path, const AnyPolicy& policy) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_policy(out, policy);
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline AnyPolicy load_policy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_policy(in);
}

}  // namespace seeplan
