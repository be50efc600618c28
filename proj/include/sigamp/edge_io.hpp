#pragma once

// Edge file and ground-truth file formats.
//
// Edge file: comma-separated text, one transaction per line. The header row
// is `user,node,day,<signal>...`; signal columns follow registry order and
// hold 0 or 1.
//
// Ground-truth file: one JSON document (format "sigamp-truth", version 1).

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "sigamp/scenario.hpp"
#include "sigamp/signal_model.hpp"

namespace sigamp {

/// Streams edges one line at a time.
class EdgeReader {
public:
    /// Reads and validates the header. Throws malformed_input.
    explicit EdgeReader(std::istream& in);

    const SignalRegistry& registry() const noexcept { return registry_; }
    /// Line number of the last record returned (1-based, header is line 1).
    std::size_t line() const noexcept { return line_; }

    /// False at end of input. Throws malformed_input naming the line.
    bool next(TransactionEdge& edge);

private:
    std::istream& in_;
    SignalRegistry registry_;
    std::size_t line_ = 0;
    std::string buffer_;
};

struct EdgeFile {
    SignalRegistry registry;
    std::vector<TransactionEdge> edges;
};

/// Reads everything; a malformed_input error lists every bad line number.
EdgeFile read_edges(std::istream& in);
EdgeFile read_edges_file(const std::string& path);

void write_edges(std::ostream& out, const SignalRegistry& registry,
                 const std::vector<TransactionEdge>& edges);

void write_ground_truth(std::ostream& out, const GroundTruth& truth);
GroundTruth read_ground_truth(std::istream& in);
GroundTruth read_ground_truth_file(const std::string& path);

}  // namespace sigamp
