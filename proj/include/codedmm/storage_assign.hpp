#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "codedmm/random.hpp"
#include "codedmm/sysparams.hpp"

namespace codedmm {

/// Set of servers as a bitmask; bit k is server S_{k+1}.
using ServerSet = std::uint64_t;
constexpr int kMaxServers = 64;

/// Batch stored jointly by one eta*q-subset of servers.
struct BatchLabel {
  std::vector<std::uint32_t> servers; ///< zero-based, increasing
  std::uint64_t index = 0;            ///< lexicographic rank
  ServerSet mask = 0;

  /// "1-2" style label with one-based server numbers.
  std::string str() const;
};

/// All C(K, etaq) labels in lexicographic order.
std::vector<BatchLabel> batch_labels(std::int64_t K, std::int64_t etaq);
std::vector<ServerSet> batch_masks(std::int64_t K, std::int64_t etaq);

/// Batches x partitions matrix of coded-row counts.
class AssignmentMatrix {
public:
  AssignmentMatrix() = default;
  AssignmentMatrix(std::int64_t batches, std::int64_t T, std::int64_t fill = 0);

  std::int64_t batches() const noexcept { return batches_; }
  std::int64_t partitions() const noexcept { return T_; }
  std::int64_t &at(std::int64_t b, std::int64_t t) { return data_[index(b, t)]; }
  std::int64_t at(std::int64_t b, std::int64_t t) const { return data_[index(b, t)]; }
  const std::int64_t *row(std::int64_t b) const { return data_.data() + b * T_; }

  std::int64_t row_sum(std::int64_t b) const;
  std::int64_t col_sum(std::int64_t t) const;
  std::int64_t total() const;

  friend bool operator==(const AssignmentMatrix &, const AssignmentMatrix &) = default;

private:
  std::int64_t batches_ = 0;
  std::int64_t T_ = 0;
  std::vector<std::int64_t> data_;

  std::size_t index(std::int64_t b, std::int64_t t) const {
    return static_cast<std::size_t>(b * T_ + t);
  }
};

/// True iff every row sums to the batch size and every column to r/T.
bool satisfies_sum_constraints(const AssignmentMatrix &P, const PartitionedParams &pp);
/// Throws RangeError naming the first violated constraint.
void check_sum_constraints(const AssignmentMatrix &P, const PartitionedParams &pp);

/// Lossless construction for T <= r/C(K, etaq): floor(r/(C T)) in every
/// cell, the remaining r/T - C*floor(r/(C T)) rows of each column placed on
/// consecutive batches of a server-balanced batch order.
AssignmentMatrix theorem1_assignment(const PartitionedParams &pp);

/// Balanced batch order: repeatedly the unused batch whose servers have been
/// used least so far, ties by lowest rank.
std::vector<std::int64_t> balanced_batch_order(std::int64_t K, std::int64_t etaq);

/// Random matrix satisfying both sum constraints. Each partition contributes
/// r/T row tokens; the shuffled tokens are dealt batch-size at a time, so every
/// placement of labelled tokens is equally likely.
AssignmentMatrix random_assignment(Rng &rng, const PartitionedParams &pp);

/// Coded rows of each partition stored by at least one server of `servers`.
std::vector<std::int64_t> stored_rows_per_partition(const AssignmentMatrix &P,
                                                    const std::vector<ServerSet> &masks,
                                                    ServerSet servers);

/// Whether every subset of `size` servers holds m/T rows of every partition.
bool all_subsets_decode(const AssignmentMatrix &P, const PartitionedParams &pp, std::int64_t size);

/// Fraction of `size`-subsets of servers that hold m/T rows of every partition.
double decodable_fraction(const AssignmentMatrix &P, const PartitionedParams &pp, std::int64_t size);

/// CSV layout: header "batch,servers,1,..,T"; one line per batch with the
/// one-based rank, the server label ("1-2") and the T counts.
void write_assignment_csv(std::ostream &os, const AssignmentMatrix &P, const SystemParams &p);
AssignmentMatrix read_assignment_csv(std::istream &is);

ServerSet full_set(std::int64_t K);

} // namespace codedmm
