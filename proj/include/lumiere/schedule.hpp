#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "lumiere/types.hpp"

namespace lumiere {

using Permutation = std::vector<ProcessorId>;

inline Permutation reversed(const Permutation& p) { return {p.rbegin(), p.rend()}; }

inline bool is_permutation_of_n(const Permutation& p, int n) {
  if (static_cast<int>(p.size()) != n) return false;
  std::vector<bool> seen(n, false);
  for (auto x : p) {
    if (x >= static_cast<ProcessorId>(n) || seen[x]) return false;
    seen[x] = true;
  }
  return true;
}

// Leader schedule for full Lumiere. Each leader gets two consecutive views;
// blocks of 2n views are ordered by g_0, g_1, ..., cycling after g_{z-1}.
class Schedule {
 public:
  Schedule(int n, std::vector<Permutation> perms, std::uint64_t seed = 0)
      : n_(n), seed_(seed), perms_(std::move(perms)) {
    if (n_ < 4) throw ConfigError("schedule needs n >= 4");
    if (perms_.size() < 2) throw ConfigError("schedule needs z >= 2");
    for (const auto& p : perms_) {
      if (!is_permutation_of_n(p, n_)) throw ConfigError("schedule entry is not a permutation");
    }
  }

  int n() const { return n_; }
  int z() const { return static_cast<int>(perms_.size()); }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Permutation>& permutations() const { return perms_; }

  // lead(v) = g_j(floor(v/2) mod n), j = floor(v/(2n)) mod z
  ProcessorId leader_of(View v) const {
    const auto n = static_cast<View>(n_);
    const auto j = static_cast<std::size_t>((v / (2 * n)) % z());
    return perms_[j][static_cast<std::size_t>((v / 2) % n)];
  }

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  int n_;
  std::uint64_t seed_;
  std::vector<Permutation> perms_;
};

// Which consecutive indices (i, i+1 mod z) must hold reverse orderings. Two
// rules are combined: every odd i, and every i at which an epoch boundary
// block transition lands (block index 5k+4 -> 5k+5 for some k). The second
// rule makes the last leader of every epoch equal the first of the next.
inline std::vector<bool> reverse_links(int z) {
  std::vector<bool> link(z, false);
  for (int i = 1; i < z; i += 2) link[i] = true;
  for (int k = 0; k < z; ++k) link[(5 * k + 4) % z] = true;
  return link;
}

inline Schedule build_schedule(int n, int z, std::uint64_t seed) {
  if (z < 2) throw ConfigError("z must be >= 2");
  if (z % 2 != 0) throw ConfigError("z must be even");
  if (n < 4) throw ConfigError("n must be >= 4");

  std::mt19937_64 rng(seed);
  const auto link = reverse_links(z);
  std::vector<std::optional<Permutation>> slots(z);

  for (int start = 0; start < z; ++start) {
    if (slots[start]) continue;
    Permutation p(n);
    std::iota(p.begin(), p.end(), ProcessorId{0});
    std::shuffle(p.begin(), p.end(), rng);
    slots[start] = p;
    // Propagate along reverse links in both directions.
    for (int i = start; link[i] && !slots[(i + 1) % z];) {
      const int next = (i + 1) % z;
      slots[next] = reversed(*slots[i]);
      i = next;
    }
    for (int i = start; !slots[(i + z - 1) % z] && link[(i + z - 1) % z];) {
      const int prev = (i + z - 1) % z;
      slots[prev] = reversed(*slots[i]);
      i = prev;
    }
  }

  std::vector<Permutation> perms;
  perms.reserve(z);
  for (auto& s : slots) perms.push_back(std::move(*s));
  return Schedule(n, std::move(perms), seed);
}

enum class BaselineVariant { Lp22, Basic };

// LP22: v mod n. Basic Lumiere: floor(v/2) mod n.
constexpr ProcessorId baseline_leader_of(BaselineVariant variant, View v, int n) {
  if (variant == BaselineVariant::Lp22) return static_cast<ProcessorId>(v % n);
  return static_cast<ProcessorId>((v / 2) % n);
}

}  // namespace lumiere
