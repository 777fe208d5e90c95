#include "ejc/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <tuple>

#include "ejc/errors.hpp"

namespace ejc {

void SpaceTruncation::validate() const {
  if (n_max < 1) throw DomainError("truncation: n_max must be >= 1");
  if (k_max < 1) throw DomainError("truncation: k_max must be >= 1");
  if (total_excitation_max && *total_excitation_max < 1)
    throw DomainError("truncation: total_excitation_max must be >= 1");
}

int BasisState::total_excitation() const {
  int total = transmon + photons;
  for (int kj : k) total += kj;
  return total;
}

std::string BasisState::label() const {
  std::ostringstream os;
  os << (transmon ? 'b' : 'a') << ",n=" << photons << ",k=(";
  for (std::size_t j = 0; j < k.size(); ++j) os << (j ? "," : "") << k[j];
  os << ')';
  return os.str();
}

EnumeratedBasis::EnumeratedBasis(const SpaceTruncation& truncation,
                                 std::span<const std::uint64_t> n_spins,
                                 std::size_t max_dimension)
    : truncation_(truncation), n_spins_(n_spins.begin(), n_spins.end()) {
  truncation.validate();
  build(truncation.n_max, truncation.k_max, truncation.total_excitation_max, max_dimension);
}

EnumeratedBasis EnumeratedBasis::without_photons(int k_max, std::optional<int> total_max,
                                                 std::span<const std::uint64_t> n_spins) {
  if (k_max < 1) throw DomainError("truncation: k_max must be >= 1");
  EnumeratedBasis b;
  b.truncation_ = SpaceTruncation{0, k_max, total_max};
  b.n_spins_.assign(n_spins.begin(), n_spins.end());
  b.build(0, k_max, total_max, kDefaultMaxDimension);
  return b;
}

void EnumeratedBasis::build(int n_max, int k_max, std::optional<int> total_max,
                            std::size_t max_dimension) {
  for (auto n : n_spins_)
    if (n < 1) throw DomainError("basis: every ensemble needs N_s >= 1");

  std::vector<int> k_cap(n_spins_.size());
  for (std::size_t j = 0; j < n_spins_.size(); ++j)
    k_cap[j] = static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(k_max), n_spins_[j]));

  BasisState cur;
  cur.k.assign(n_spins_.size(), 0);
  std::function<void(std::size_t, int)> recurse = [&](std::size_t j, int used) {
    if (j == n_spins_.size()) {
      states_.push_back(cur);
      if (states_.size() > max_dimension)
        throw DimensionError("basis dimension exceeds the cap of " + std::to_string(max_dimension) +
                             " states; reduce n_max, k_max or total_excitation_max");
      return;
    }
    for (int kj = 0; kj <= k_cap[j]; ++kj) {
      if (total_max && used + kj > *total_max) break;
      cur.k[j] = kj;
      recurse(j + 1, used + kj);
    }
    cur.k[j] = 0;
  };
  for (int t = 0; t <= 1; ++t) {
    for (int n = 0; n <= n_max; ++n) {
      if (total_max && t + n > *total_max) break;
      cur.transmon = t;
      cur.photons = n;
      recurse(0, t + n);
    }
  }

  std::sort(states_.begin(), states_.end(), [](const BasisState& x, const BasisState& y) {
    return std::forward_as_tuple(x.total_excitation(), x.transmon, x.photons, x.k) <
           std::forward_as_tuple(y.total_excitation(), y.transmon, y.photons, y.k);
  });

  for (std::size_t i = 0; i < states_.size(); ++i) {
    index_.emplace(states_[i], i);
    const auto n = static_cast<std::size_t>(states_[i].total_excitation());
    if (blocks_.size() <= n) blocks_.resize(n + 1);
    blocks_[n].push_back(i);
  }
}

std::optional<std::size_t> EnumeratedBasis::index_of(const BasisState& s) const {
  auto it = index_.find(s);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t EnumeratedBasis::require_index(const BasisState& s) const {
  if (auto i = index_of(s)) return *i;
  throw DomainError("state " + s.label() + " is not part of the truncated basis");
}

std::span<const std::size_t> EnumeratedBasis::block(int excitation) const {
  if (excitation < 0 || static_cast<std::size_t>(excitation) >= blocks_.size()) return {};
  return blocks_[static_cast<std::size_t>(excitation)];
}

EnumeratedBasis enumerate_basis(const SpaceTruncation& truncation,
                                std::span<const std::uint64_t> n_spins,
                                std::size_t max_dimension) {
  return EnumeratedBasis(truncation, n_spins, max_dimension);
}

double collective_raising_element(std::uint64_t n_spins, int k, SpinModel model) {
  if (k < 0) throw DomainError("collective_raising_element: k must be >= 0");
  const double n = static_cast<double>(n_spins);
  const double kp1 = static_cast<double>(k) + 1.0;
  if (model == SpinModel::bosonic) return std::sqrt(kp1 * n);
  if (static_cast<std::uint64_t>(k) >= n_spins) return 0.0;
  return std::sqrt(kp1 * (n - static_cast<double>(k)));
}

const std::vector<std::vector<std::size_t>>& excitation_blocks(const EnumeratedBasis& basis) {
  return basis.blocks();
}

}  // namespace ejc
