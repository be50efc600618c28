#include "sigamp/edge_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include <fmt/format.h>
#include <json.hpp>

#include "sigamp/errors.hpp"

namespace sigamp {

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view chomp(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

/// Empty string on success, otherwise the reason.
std::string parse_record(std::string_view line, std::size_t n_signals, TransactionEdge& edge) {
    const auto fields = split(line);
    if (fields.size() != 3 + n_signals) {
        return fmt::format("expected {} fields, found {}", 3 + n_signals, fields.size());
    }
    if (fields[0].empty() || fields[1].empty()) return "empty user or node";
    std::int64_t day = 0;
    const auto* first = fields[2].data();
    const auto* last = first + fields[2].size();
    auto [ptr, ec] = std::from_chars(first, last, day);
    if (ec != std::errc{} || ptr != last || day < 0) return "day must be a non-negative integer";
    SignalMask hits = 0;
    for (std::size_t k = 0; k < n_signals; ++k) {
        const auto bit = fields[3 + k];
        if (bit == "1") {
            hits |= SignalMask{1} << k;
        } else if (bit != "0") {
            return fmt::format("signal column {} must be 0 or 1", k + 1);
        }
    }
    edge.user = UserId(std::string(fields[0]));
    edge.node = NodeId(std::string(fields[1]));
    edge.day = day;
    edge.hits = hits;
    return {};
}

}  // namespace

EdgeReader::EdgeReader(std::istream& in) : in_(in) {
    if (!std::getline(in_, buffer_)) {
        throw Error(ErrorCode::malformed_input, "line 1: missing header");
    }
    line_ = 1;
    const auto fields = split(chomp(buffer_));
    if (fields.size() < 3 || fields[0] != "user" || fields[1] != "node" || fields[2] != "day") {
        throw Error(ErrorCode::malformed_input, "line 1: header must start with user,node,day");
    }
    try {
        for (std::size_t i = 3; i < fields.size(); ++i) {
            registry_.register_signal(std::string(fields[i]));
        }
    } catch (const Error& e) {
        throw Error(ErrorCode::malformed_input, std::string("line 1: ") + e.what());
    }
}

bool EdgeReader::next(TransactionEdge& edge) {
    while (std::getline(in_, buffer_)) {
        ++line_;
        const auto line = chomp(buffer_);
        if (line.empty()) continue;
        const auto reason = parse_record(line, registry_.size(), edge);
        if (!reason.empty()) {
            throw Error(ErrorCode::malformed_input, fmt::format("line {}: {}", line_, reason));
        }
        return true;
    }
    return false;
}

EdgeFile read_edges(std::istream& in) {
    EdgeReader reader(in);
    EdgeFile file{reader.registry(), {}};
    std::vector<std::size_t> bad;
    std::string first_reason;
    TransactionEdge edge;
    while (true) {
        try {
            if (!reader.next(edge)) break;
            file.edges.push_back(edge);
        } catch (const Error& e) {
            if (bad.empty()) first_reason = e.what();
            bad.push_back(reader.line());
        }
    }
    if (!bad.empty()) {
        constexpr std::size_t kListed = 20;
        std::string lines;
        for (std::size_t i = 0; i < std::min(bad.size(), kListed); ++i) {
            lines += (i ? "," : "") + std::to_string(bad[i]);
        }
        if (bad.size() > kListed) lines += ",...";
        throw Error(ErrorCode::malformed_input,
                    fmt::format("{} malformed line(s): {} (first: {})", bad.size(), lines, first_reason));
    }
    return file;
}

EdgeFile read_edges_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open edge file: " + path);
    return read_edges(in);
}

void write_edges(std::ostream& out, const SignalRegistry& registry,
                 const std::vector<TransactionEdge>& edges) {
    std::string buf = "user,node,day";
    for (const auto& id : registry.ids()) buf += "," + id;
    buf += '\n';
    out << buf;
    for (const auto& e : edges) {
        buf.clear();
        buf += e.user.str();
        buf += ',';
        buf += e.node.str();
        buf += ',';
        buf += std::to_string(e.day);
        for (std::size_t k = 0; k < registry.size(); ++k) {
            buf += e.hit(k) ? ",1" : ",0";
        }
        buf += '\n';
        out << buf;
    }
    if (!out) throw Error(ErrorCode::io, "failed to write edges");
}

void write_ground_truth(std::ostream& out, const GroundTruth& truth) {
    nlohmann::ordered_json j;
    j["format"] = "sigamp-truth";
    j["version"] = 1;
    j["signals"] = truth.signals;
    if (truth.attack_window) {
        j["attack_window"] = {truth.attack_window->first, truth.attack_window->second};
    } else {
        j["attack_window"] = nullptr;
    }
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : truth.cashout_nodes) nodes.push_back(n.str());
    j["cashout_nodes"] = std::move(nodes);
    auto users = nlohmann::ordered_json::array();
    for (const auto& u : truth.sybil_users) {
        const auto it = truth.carriers.find(u);
        const SignalMask mask = it == truth.carriers.end() ? 0 : it->second;
        std::vector<int> flags;
        for (std::size_t k = 0; k < truth.signals.size(); ++k) flags.push_back((mask >> k) & 1U);
        users.push_back({{"id", u.str()}, {"carries", flags}});
    }
    j["sybil_users"] = std::move(users);
    out << j.dump(1) << '\n';
    if (!out) throw Error(ErrorCode::io, "failed to write ground truth");
}

GroundTruth read_ground_truth(std::istream& in) {
    try {
        nlohmann::json j;
        in >> j;
        if (j.at("format") != "sigamp-truth" || j.at("version") != 1) {
            throw Error(ErrorCode::malformed_input, "not a sigamp-truth v1 document");
        }
        GroundTruth truth;
        truth.signals = j.at("signals").get<std::vector<std::string>>();
        if (!j.at("attack_window").is_null()) {
            const auto w = j["attack_window"].get<std::vector<std::int64_t>>();
            if (w.size() != 2) throw Error(ErrorCode::malformed_input, "attack_window needs 2 days");
            truth.attack_window = std::make_pair(w[0], w[1]);
        }
        for (const auto& n : j.at("cashout_nodes")) truth.cashout_nodes.emplace_back(n.get<std::string>());
        for (const auto& u : j.at("sybil_users")) {
            UserId id(u.at("id").get<std::string>());
            const auto flags = u.at("carries").get<std::vector<int>>();
            if (flags.size() != truth.signals.size()) {
                throw Error(ErrorCode::malformed_input, "carries width differs from signals");
            }
            SignalMask mask = 0;
            for (std::size_t k = 0; k < flags.size(); ++k) {
                if (flags[k] != 0) mask |= SignalMask{1} << k;
            }
            truth.carriers.emplace(id, mask);
            truth.sybil_users.push_back(std::move(id));
        }
        std::sort(truth.sybil_users.begin(), truth.sybil_users.end());
        std::sort(truth.cashout_nodes.begin(), truth.cashout_nodes.end());
        return truth;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::malformed_input, std::string("ground truth: ") + e.what());
    }
}

GroundTruth read_ground_truth_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open ground-truth file: " + path);
    return read_ground_truth(in);
}

}  // namespace sigamp
