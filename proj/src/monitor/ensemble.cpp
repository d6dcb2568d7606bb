#include "iscm/monitor/ensemble.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace iscm::monitor {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool label_of(std::string_view line, Role &role, std::string_view &rest) {
    static const Role kAll[] = {Role::Case, Role::Viol, Role::ViolPerm, Role::ViolPending, Role::SatPending};
    for (Role r : kAll) {
        const std::string label = std::string(role_name(r)) + ":";
        if (line.substr(0, label.size()) == label) {
            role = r;
            rest = line.substr(label.size());
            return true;
        }
    }
    return false;
}

}  // namespace

std::string_view mode_name(Mode m) { return m == Mode::PostMortem ? "postmortem" : "monitor"; }

std::string_view role_name(Role r) {
    switch (r) {
        case Role::Case: return "CASE";
        case Role::Viol: return "VIOL";
        case Role::ViolPerm: return "VIOL_PERM";
        case Role::ViolPending: return "VIOL_PENDING";
        case Role::SatPending: return "SAT_PENDING";
    }
    return "?";
}

const std::vector<Role> &roles_for(Mode m) {
    static const std::vector<Role> kPostMortem{Role::Case, Role::Viol};
    static const std::vector<Role> kMonitor{Role::Case, Role::ViolPerm, Role::ViolPending, Role::SatPending};
    return m == Mode::PostMortem ? kPostMortem : kMonitor;
}

bool ConstraintEnsemble::has(Role r) const {
    return std::any_of(queries.begin(), queries.end(), [r](const EnsembleQuery &q) { return q.role == r; });
}

const EnsembleQuery &ConstraintEnsemble::query(Role r) const {
    for (const auto &q : queries)
        if (q.role == r) return q;
    throw std::out_of_range("constraint " + name + " has no " + std::string(role_name(r)) + " query");
}

EnsembleError::EnsembleError(std::size_t l, const std::string &message)
    : std::runtime_error(l ? "line " + std::to_string(l) + ": " + message : message), line(l) {}

ConstraintEnsemble parse_ensemble(std::string_view text) {
    ConstraintEnsemble out;
    bool have_header = false;
    EnsembleQuery *current = nullptr;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') {
            if (current && line.empty()) current->source += '\n';
            continue;
        }
        if (!have_header) {
            std::istringstream words{std::string(line)};
            std::string kw, name, mode_kw, mode;
            words >> kw >> name >> mode_kw >> mode;
            std::string extra;
            if (kw != "constraint" || name.empty() || mode_kw != "mode" || (words >> extra))
                throw EnsembleError(line_no, "expected header 'constraint <name> mode <postmortem|monitor>'");
            if (mode == "postmortem") out.mode = Mode::PostMortem;
            else if (mode == "monitor") out.mode = Mode::Monitor;
            else throw EnsembleError(line_no, "unknown mode '" + mode + "' (expected postmortem or monitor)");
            out.name = name;
            have_header = true;
            continue;
        }
        Role role;
        std::string_view rest;
        if (label_of(line, role, rest)) {
            const auto &allowed = roles_for(out.mode);
            if (std::find(allowed.begin(), allowed.end(), role) == allowed.end())
                throw EnsembleError(line_no, std::string(role_name(role)) + " block is not allowed in " +
                                                 std::string(mode_name(out.mode)) + " mode");
            if (out.has(role)) throw EnsembleError(line_no, "duplicate " + std::string(role_name(role)) + " block");
            out.queries.push_back({role, std::string(trim(rest)), line_no});
            current = &out.queries.back();
            continue;
        }
        if (!current) throw EnsembleError(line_no, "query text outside of a block (expected CASE:)");
        if (!current->source.empty() && current->source.back() != '\n') current->source += '\n';
        current->source += raw;
    }
    if (!have_header) throw EnsembleError(0, "missing 'constraint <name> mode <...>' header");
    for (auto &q : out.queries) {
        q.source = std::string(trim(q.source));
        if (q.source.empty()) throw EnsembleError(q.line, std::string(role_name(q.role)) + " block is empty");
    }
    for (Role r : roles_for(out.mode))
        if (!out.has(r)) throw EnsembleError(0, "missing " + std::string(role_name(r)) + " block");
    std::stable_sort(out.queries.begin(), out.queries.end(),
                     [](const EnsembleQuery &a, const EnsembleQuery &b) { return a.role < b.role; });
    return out;
}

ConstraintEnsemble load_ensemble(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw EnsembleError(0, "cannot read constraint file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_ensemble(buf.str());
    } catch (const EnsembleError &e) {
        throw EnsembleError(e.line, path + ": " + e.what());
    }
}

std::string format_ensemble(const ConstraintEnsemble &e) {
    std::string out = "constraint " + e.name + " mode " + std::string(mode_name(e.mode)) + "\n";
    for (Role r : roles_for(e.mode)) {
        if (!e.has(r)) continue;
        out += "\n" + std::string(role_name(r)) + ":\n" + e.query(r).source + "\n";
    }
    return out;
}

}  // namespace iscm::monitor
