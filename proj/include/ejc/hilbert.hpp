#pragma once

// Truncated product basis transmon (x) cavity photons (x) symmetric Dicke
// ladders, one per ensemble. N_s only enters matrix elements.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ejc/params.hpp"

namespace ejc {

inline constexpr std::size_t kDefaultMaxDimension = 20000;

struct SpaceTruncation {
  int n_max = 4;
  int k_max = 3;
  std::optional<int> total_excitation_max = 4;

  void validate() const;
};

struct BasisState {
  int transmon = 0;  // 0 = |a>, 1 = |b>
  int photons = 0;
  std::vector<int> k;

  int total_excitation() const;
  /// e.g. "b,n=1,k=(0,2)"
  std::string label() const;

  auto operator<=>(const BasisState&) const = default;
  bool operator==(const BasisState&) const = default;
};

/// Immutable, deterministically ordered basis with its block partition by
/// total excitation number. Ordering is lexicographic in
/// (total excitation, transmon, photons, k).
class EnumeratedBasis {
 public:
  EnumeratedBasis(const SpaceTruncation& truncation, std::span<const std::uint64_t> n_spins,
                  std::size_t max_dimension = kDefaultMaxDimension);

  /// Photon-free basis (transmon (x) ensembles) used by the effective model.
  static EnumeratedBasis without_photons(int k_max, std::optional<int> total_excitation_max,
                                         std::span<const std::uint64_t> n_spins);

  std::size_t size() const { return states_.size(); }
  std::size_t num_ensembles() const { return n_spins_.size(); }
  const BasisState& state(std::size_t i) const { return states_.at(i); }
  const std::vector<BasisState>& states() const { return states_; }
  std::optional<std::size_t> index_of(const BasisState& s) const;
  /// Like index_of but throws DomainError when the state is not in the basis.
  std::size_t require_index(const BasisState& s) const;

  const std::vector<std::vector<std::size_t>>& blocks() const { return blocks_; }
  /// Indices of the block with the given total excitation (empty if absent).
  std::span<const std::size_t> block(int excitation) const;
  int block_of(std::size_t i) const { return states_.at(i).total_excitation(); }

  const std::vector<std::uint64_t>& n_spins() const { return n_spins_; }
  const SpaceTruncation& truncation() const { return truncation_; }

 private:
  EnumeratedBasis() = default;
  void build(int n_max, int k_max, std::optional<int> total_max, std::size_t max_dimension);

  SpaceTruncation truncation_;
  std::vector<std::uint64_t> n_spins_;
  std::vector<BasisState> states_;
  std::map<BasisState, std::size_t> index_;
  std::vector<std::vector<std::size_t>> blocks_;
};

EnumeratedBasis enumerate_basis(const SpaceTruncation& truncation,
                                std::span<const std::uint64_t> n_spins,
                                std::size_t max_dimension = kDefaultMaxDimension);

/// <k+1| S_+ |k> in the symmetric sector: sqrt((k+1)(N_s-k)) for the exact
/// Dicke ladder, sqrt((k+1) N_s) in the bosonic (Holstein-Primakoff) limit.
/// Zero once the ladder is fully inverted (k >= N_s, exact model).
double collective_raising_element(std::uint64_t n_spins, int k, SpinModel model);

const std::vector<std::vector<std::size_t>>& excitation_blocks(const EnumeratedBasis& basis);

}  // namespace ejc
