#include "codedmm/storage_assign.hpp"

#include <bit>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "codedmm/combinatorics.hpp"
#include "codedmm/errors.hpp"

namespace codedmm {

std::string BatchLabel::str() const {
  std::string s;
  for (std::size_t i = 0; i < servers.size(); ++i) {
    if (i) {
      s += '-';
    }
    s += std::to_string(servers[i] + 1);
  }
  return s;
}

ServerSet full_set(std::int64_t K) {
  if (K > kMaxServers) {
    throw RangeError("at most 64 servers are supported by batch-level evaluation");
  }
  return K == kMaxServers ? ~ServerSet{0} : (ServerSet{1} << K) - 1;
}

std::vector<BatchLabel> batch_labels(std::int64_t K, std::int64_t etaq) {
  full_set(K);
  if (etaq < 1 || etaq > K) {
    throw RangeError("eta*q must lie in [1, K]");
  }
  const auto n = static_cast<std::uint32_t>(K);
  std::vector<BatchLabel> out;
  out.reserve(binomial(static_cast<std::uint64_t>(K), static_cast<std::uint64_t>(etaq)));
  auto c = first_combination(static_cast<std::uint32_t>(etaq));
  do {
    BatchLabel label;
    label.servers = c;
    label.index = out.size();
    for (const auto s : c) {
      label.mask |= ServerSet{1} << s;
    }
    out.push_back(std::move(label));
  } while (next_combination(c, n));
  return out;
}

std::vector<ServerSet> batch_masks(std::int64_t K, std::int64_t etaq) {
  std::vector<ServerSet> masks;
  for (const auto &l : batch_labels(K, etaq)) {
    masks.push_back(l.mask);
  }
  return masks;
}

AssignmentMatrix::AssignmentMatrix(std::int64_t batches, std::int64_t T, std::int64_t fill)
    : batches_(batches), T_(T) {
  if (batches <= 0 || T <= 0) {
    throw RangeError("assignment matrix dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(batches * T), fill);
}

std::int64_t AssignmentMatrix::row_sum(std::int64_t b) const {
  return std::accumulate(row(b), row(b) + T_, std::int64_t{0});
}

std::int64_t AssignmentMatrix::col_sum(std::int64_t t) const {
  std::int64_t s = 0;
  for (std::int64_t b = 0; b < batches_; ++b) {
    s += at(b, t);
  }
  return s;
}

std::int64_t AssignmentMatrix::total() const {
  return std::accumulate(data_.begin(), data_.end(), std::int64_t{0});
}

namespace {

std::string describe_violation(const AssignmentMatrix &P, const PartitionedParams &pp) {
  const auto &p = pp.base;
  if (P.batches() != p.batches || P.partitions() != pp.T) {
    return "assignment matrix is " + std::to_string(P.batches()) + "x" +
           std::to_string(P.partitions()) + ", expected " + std::to_string(p.batches) + "x" +
           std::to_string(pp.T);
  }
  const std::int64_t bs = p.batch_size_int();
  for (std::int64_t b = 0; b < P.batches(); ++b) {
    for (std::int64_t t = 0; t < P.partitions(); ++t) {
      if (P.at(b, t) < 0) {
        return "negative entry at batch " + std::to_string(b + 1);
      }
    }
    if (P.row_sum(b) != bs) {
      return "row " + std::to_string(b + 1) + " sums to " + std::to_string(P.row_sum(b)) +
             ", expected batch size " + std::to_string(bs);
    }
  }
  for (std::int64_t t = 0; t < P.partitions(); ++t) {
    if (P.col_sum(t) != pp.rows_per_partition()) {
      return "column " + std::to_string(t + 1) + " sums to " + std::to_string(P.col_sum(t)) +
             ", expected r/T = " + std::to_string(pp.rows_per_partition());
    }
  }
  return {};
}

} // namespace

bool satisfies_sum_constraints(const AssignmentMatrix &P, const PartitionedParams &pp) {
  return describe_violation(P, pp).empty();
}

void check_sum_constraints(const AssignmentMatrix &P, const PartitionedParams &pp) {
  if (auto msg = describe_violation(P, pp); !msg.empty()) {
    throw RangeError(msg);
  }
}

std::vector<std::int64_t> balanced_batch_order(std::int64_t K, std::int64_t etaq) {
  const auto labels = batch_labels(K, etaq);
  std::vector<std::int64_t> usage(static_cast<std::size_t>(K), 0);
  std::vector<bool> used(labels.size(), false);
  std::vector<std::int64_t> order;
  order.reserve(labels.size());
  for (std::size_t step = 0; step < labels.size(); ++step) {
    std::size_t best = labels.size();
    std::int64_t best_key = 0;
    for (std::size_t b = 0; b < labels.size(); ++b) {
      if (used[b]) {
        continue;
      }
      std::int64_t key = 0;
      for (const auto s : labels[b].servers) {
        key += usage[s];
      }
      if (best == labels.size() || key < best_key) {
        best = b;
        best_key = key;
      }
    }
    used[best] = true;
    order.push_back(static_cast<std::int64_t>(best));
    for (const auto s : labels[best].servers) {
      ++usage[s];
    }
  }
  return order;
}

AssignmentMatrix theorem1_assignment(const PartitionedParams &pp) {
  const auto &p = pp.base;
  const std::int64_t C = p.batches;
  if (pp.T > partition_limit(p)) {
    throw PartitionLimitExceeded("T = " + std::to_string(pp.T) + " exceeds r/C(K, eta*q) = " +
                                 std::to_string(partition_limit(p)));
  }
  const std::int64_t base = p.r / (C * pp.T);
  const std::int64_t extra = pp.rows_per_partition() - C * base;
  AssignmentMatrix P(C, pp.T, base);
  const auto order = balanced_batch_order(p.K, p.etaq);
  std::size_t pos = 0;
  for (std::int64_t t = 0; t < pp.T; ++t) {
    for (std::int64_t k = 0; k < extra; ++k) {
      ++P.at(order[pos % order.size()], t);
      ++pos;
    }
  }
  return P;
}

AssignmentMatrix random_assignment(Rng &rng, const PartitionedParams &pp) {
  const auto &p = pp.base;
  const std::int64_t bs = p.batch_size_int();
  std::vector<std::int64_t> tokens;
  tokens.reserve(static_cast<std::size_t>(p.r));
  for (std::int64_t t = 0; t < pp.T; ++t) {
    tokens.insert(tokens.end(), static_cast<std::size_t>(pp.rows_per_partition()), t);
  }
  rng.shuffle(tokens);
  AssignmentMatrix P(p.batches, pp.T);
  std::size_t k = 0;
  for (std::int64_t b = 0; b < p.batches; ++b) {
    for (std::int64_t i = 0; i < bs; ++i) {
      ++P.at(b, tokens[k++]);
    }
  }
  return P;
}

std::vector<std::int64_t> stored_rows_per_partition(const AssignmentMatrix &P,
                                                    const std::vector<ServerSet> &masks,
                                                    ServerSet servers) {
  std::vector<std::int64_t> out(static_cast<std::size_t>(P.partitions()), 0);
  for (std::int64_t b = 0; b < P.batches(); ++b) {
    if ((masks[static_cast<std::size_t>(b)] & servers) == 0) {
      continue;
    }
    const auto *row = P.row(b);
    for (std::int64_t t = 0; t < P.partitions(); ++t) {
      out[static_cast<std::size_t>(t)] += row[t];
    }
  }
  return out;
}

namespace {

template <typename F>
void for_each_subset(std::int64_t K, std::int64_t size, F &&f) {
  auto c = first_combination(static_cast<std::uint32_t>(size));
  do {
    ServerSet s = 0;
    for (const auto v : c) {
      s |= ServerSet{1} << v;
    }
    f(s);
  } while (next_combination(c, static_cast<std::uint32_t>(K)));
}

bool decodes(const AssignmentMatrix &P, const std::vector<ServerSet> &masks, ServerSet s,
             std::int64_t need) {
  for (const auto v : stored_rows_per_partition(P, masks, s)) {
    if (v < need) {
      return false;
    }
  }
  return true;
}

} // namespace

bool all_subsets_decode(const AssignmentMatrix &P, const PartitionedParams &pp, std::int64_t size) {
  const auto masks = batch_masks(pp.base.K, pp.base.etaq);
  bool ok = true;
  for_each_subset(pp.base.K, size, [&](ServerSet s) {
    ok = ok && decodes(P, masks, s, pp.decode_threshold());
  });
  return ok;
}

double decodable_fraction(const AssignmentMatrix &P, const PartitionedParams &pp, std::int64_t size) {
  const auto masks = batch_masks(pp.base.K, pp.base.etaq);
  std::uint64_t good = 0;
  std::uint64_t total = 0;
  for_each_subset(pp.base.K, size, [&](ServerSet s) {
    ++total;
    good += decodes(P, masks, s, pp.decode_threshold()) ? 1 : 0;
  });
  return static_cast<double>(good) / static_cast<double>(total);
}

void write_assignment_csv(std::ostream &os, const AssignmentMatrix &P, const SystemParams &p) {
  const auto labels = batch_labels(p.K, p.etaq);
  os << "batch,servers";
  for (std::int64_t t = 0; t < P.partitions(); ++t) {
    os << ',' << t + 1;
  }
  os << '\n';
  for (std::int64_t b = 0; b < P.batches(); ++b) {
    os << b + 1 << ',' << labels[static_cast<std::size_t>(b)].str();
    for (std::int64_t t = 0; t < P.partitions(); ++t) {
      os << ',' << P.at(b, t);
    }
    os << '\n';
  }
}

AssignmentMatrix read_assignment_csv(std::istream &is) {
  std::string line;
  do {
    if (!std::getline(is, line)) {
      throw RangeError("assignment CSV is empty");
    }
  } while (line.empty() || line[0] == '#');
  std::int64_t T = 0;
  for (const char c : line) {
    T += c == ',' ? 1 : 0;
  }
  T -= 1;
  if (T < 1 || line.rfind("batch,servers", 0) != 0) {
    throw RangeError("assignment CSV header must start with batch,servers");
  }
  std::vector<std::vector<std::int64_t>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") {
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    std::getline(ss, cell, ',');
    std::vector<std::int64_t> row;
    while (std::getline(ss, cell, ',')) {
      row.push_back(std::stoll(cell));
    }
    if (static_cast<std::int64_t>(row.size()) != T) {
      throw RangeError("assignment CSV line " + std::to_string(rows.size() + 2) + " has " +
                       std::to_string(row.size()) + " counts, expected " + std::to_string(T));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw RangeError("assignment CSV has no batch rows");
  }
  AssignmentMatrix P(static_cast<std::int64_t>(rows.size()), T);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    for (std::int64_t t = 0; t < T; ++t) {
      P.at(static_cast<std::int64_t>(b), t) = rows[b][static_cast<std::size_t>(t)];
    }
  }
  return P;
}

} // namespace codedmm
