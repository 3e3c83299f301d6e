#pragma once

// Mixed-integer CASH search space: N functional modules, K_i algorithm
// choices per module, and per-algorithm continuous / integer HP boxes.
//
// HPs are addressed through a flat index map: modules in declaration order,
// algorithms in declaration order, continuous HPs before integer HPs within an
// algorithm. Each HP also has an offset into either the continuous vector or
// the relaxed-integer vector of a ThetaAssignment.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cashadmm/random.hpp"

namespace cashadmm {

enum class HpKind { continuous, integer };

struct HpSpec {
  std::string name;
  HpKind kind = HpKind::continuous;
  double lower = 0.0;
  double upper = 1.0;
};

struct AlgorithmSpec {
  std::string name;
  std::vector<HpSpec> hps;
};

struct ModuleSpec {
  std::string name;
  std::vector<AlgorithmSpec> algorithms;
};

/// One entry of the flat index map.
struct HpSlot {
  std::size_t module = 0;
  std::size_t algorithm = 0;
  std::size_t hp = 0;  // position in AlgorithmSpec::hps
  HpKind kind = HpKind::continuous;
  std::size_t flat = 0;
  std::size_t offset = 0;  // into ThetaAssignment::cont or ::relaxed_int
  double lower = 0.0;
  double upper = 1.0;
};

/// Dense encoding of the one-hot z: choice[i] is the algorithm picked in module i.
struct Selection {
  std::vector<std::size_t> choice;

  auto operator<=>(const Selection&) const = default;
  bool operator==(const Selection&) const = default;
};

struct ThetaAssignment {
  std::vector<double> cont;
  std::vector<double> relaxed_int;

  bool operator==(const ThetaAssignment&) const = default;
};

class SearchSpace {
 public:
  SearchSpace() = default;

  explicit SearchSpace(std::vector<ModuleSpec> modules) : modules_(std::move(modules)) {
    build_index();
  }

  const std::vector<ModuleSpec>& modules() const noexcept { return modules_; }
  std::size_t num_modules() const noexcept { return modules_.size(); }
  std::size_t num_algorithms(std::size_t module) const {
    return modules_.at(module).algorithms.size();
  }

  std::size_t num_hps() const noexcept { return slots_.size(); }
  std::size_t num_continuous() const noexcept { return continuous_.size(); }
  std::size_t num_integer() const noexcept { return integer_.size(); }

  const std::vector<HpSlot>& slots() const noexcept { return slots_; }
  const HpSlot& slot(std::size_t flat) const { return slots_.at(flat); }
  const HpSlot& continuous_slot(std::size_t offset) const { return slots_.at(continuous_.at(offset)); }
  const HpSlot& integer_slot(std::size_t offset) const { return slots_.at(integer_.at(offset)); }

  /// Flat indices owned by algorithm j of module i (continuous first).
  std::span<const std::size_t> algorithm_slots(std::size_t module, std::size_t algorithm) const {
    return by_algorithm_.at(module).at(algorithm);
  }

  /// Total sum of K_i.
  std::size_t total_algorithms() const noexcept {
    std::size_t total = 0;
    for (const auto& m : modules_) total += m.algorithms.size();
    return total;
  }

  /// Product of K_i, saturating at SIZE_MAX.
  std::size_t num_combinations() const noexcept {
    std::size_t product = 1;
    for (const auto& m : modules_) {
      const std::size_t k = m.algorithms.size();
      if (k == 0) return 0;
      if (product > std::numeric_limits<std::size_t>::max() / k) {
        return std::numeric_limits<std::size_t>::max();
      }
      product *= k;
    }
    return product;
  }

 private:
  void build_index() {
    by_algorithm_.resize(modules_.size());
    for (std::size_t i = 0; i < modules_.size(); ++i) {
      const auto& algorithms = modules_[i].algorithms;
      by_algorithm_[i].resize(algorithms.size());
      for (std::size_t j = 0; j < algorithms.size(); ++j) {
        for (HpKind pass : {HpKind::continuous, HpKind::integer}) {
          const auto& hps = algorithms[j].hps;
          for (std::size_t h = 0; h < hps.size(); ++h) {
            if (hps[h].kind != pass) continue;
            auto& bucket = pass == HpKind::continuous ? continuous_ : integer_;
            HpSlot slot{i, j, h, pass, slots_.size(), bucket.size(), hps[h].lower, hps[h].upper};
            bucket.push_back(slot.flat);
            by_algorithm_[i][j].push_back(slot.flat);
            slots_.push_back(slot);
          }
        }
      }
    }
  }

  std::vector<ModuleSpec> modules_;
  std::vector<HpSlot> slots_;
  std::vector<std::size_t> continuous_;
  std::vector<std::size_t> integer_;
  std::vector<std::vector<std::vector<std::size_t>>> by_algorithm_;
};

/// Returns one message per violated invariant; empty means the space is valid.
inline std::vector<std::string> validate_space(const SearchSpace& space) {
  std::vector<std::string> violations;
  if (space.num_modules() == 0) violations.emplace_back("search space has no modules");
  for (const auto& module : space.modules()) {
    if (module.algorithms.empty()) {
      violations.push_back("module '" + module.name + "' has no algorithms");
    }
    std::set<std::string> names;
    for (const auto& algorithm : module.algorithms) {
      const std::string where = "'" + module.name + "/" + algorithm.name + "'";
      if (!names.insert(algorithm.name).second) {
        violations.push_back("duplicate algorithm name " + where);
      }
      for (const auto& hp : algorithm.hps) {
        const std::string hp_where = "'" + module.name + "/" + algorithm.name + "/" + hp.name + "'";
        if (!std::isfinite(hp.lower) || !std::isfinite(hp.upper)) {
          violations.push_back("non-finite bounds on " + hp_where);
          continue;
        }
        if (hp.lower > hp.upper) violations.push_back("lower > upper on " + hp_where);
        if (hp.kind == HpKind::integer &&
            (std::floor(hp.lower) != hp.lower || std::floor(hp.upper) != hp.upper)) {
          violations.push_back("non-integral bounds on integer HP " + hp_where);
        }
      }
    }
  }
  return violations;
}

inline void check_selection(const SearchSpace& space, const Selection& sel) {
  if (sel.choice.size() != space.num_modules()) {
    throw std::out_of_range("selection has " + std::to_string(sel.choice.size()) +
                            " entries, space has " + std::to_string(space.num_modules()) +
                            " modules");
  }
  for (std::size_t i = 0; i < sel.choice.size(); ++i) {
    if (sel.choice[i] >= space.num_algorithms(i)) {
      throw std::out_of_range("selection index " + std::to_string(sel.choice[i]) +
                              " out of range for module " + std::to_string(i));
    }
  }
}

/// Flat indices of the HPs belonging to the chosen algorithms, ascending.
inline std::vector<std::size_t> active_set(const SearchSpace& space, const Selection& sel) {
  check_selection(space, sel);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < sel.choice.size(); ++i) {
    const auto owned = space.algorithm_slots(i, sel.choice[i]);
    active.insert(active.end(), owned.begin(), owned.end());
  }
  return active;
}

inline double project_box(double x, double lower, double upper) {
  return std::clamp(x, lower, upper);
}

/// Clamp to [lower, upper] then round to nearest; exact halves round up.
inline std::int64_t project_integer(double x, std::int64_t lower, std::int64_t upper) {
  const double clamped = std::clamp(x, static_cast<double>(lower), static_cast<double>(upper));
  const double floor_value = std::floor(clamped);
  const double rounded = (clamped - floor_value) >= 0.5 ? floor_value + 1.0 : floor_value;
  return std::clamp(static_cast<std::int64_t>(rounded), lower, upper);
}

inline std::int64_t project_integer(double x, const HpSlot& slot) {
  return project_integer(x, static_cast<std::int64_t>(slot.lower), static_cast<std::int64_t>(slot.upper));
}

/// Uniform (z, theta); integer dims are drawn integral.
inline std::pair<Selection, ThetaAssignment> sample_uniform(const SearchSpace& space,
                                                            std::uint64_t seed) {
  rng_t rng(seed);
  Selection sel;
  sel.choice.reserve(space.num_modules());
  for (std::size_t i = 0; i < space.num_modules(); ++i) {
    const auto k = static_cast<std::int64_t>(space.num_algorithms(i));
    sel.choice.push_back(static_cast<std::size_t>(uniform_int(rng, 0, k - 1)));
  }
  ThetaAssignment theta;
  theta.cont.resize(space.num_continuous());
  theta.relaxed_int.resize(space.num_integer());
  for (const auto& slot : space.slots()) {
    if (slot.kind == HpKind::continuous) {
      theta.cont[slot.offset] = uniform(rng, slot.lower, slot.upper);
    } else {
      theta.relaxed_int[slot.offset] = static_cast<double>(
          uniform_int(rng, static_cast<std::int64_t>(slot.lower), static_cast<std::int64_t>(slot.upper)));
    }
  }
  return {std::move(sel), std::move(theta)};
}

// JSON schema:
// {"modules":[{"name":..,"algorithms":[{"name":..,"hps":[{"name":..,
//   "kind":"continuous"|"integer","lower":..,"upper":..}]}]}]}

inline SearchSpace space_from_json(const nlohmann::json& doc) {
  std::vector<ModuleSpec> modules;
  for (const auto& m : doc.at("modules")) {
    ModuleSpec module{m.at("name").get<std::string>(), {}};
    for (const auto& a : m.at("algorithms")) {
      AlgorithmSpec algorithm{a.at("name").get<std::string>(), {}};
      for (const auto& h : a.value("hps", nlohmann::json::array())) {
        HpSpec hp;
        hp.name = h.at("name").get<std::string>();
        const auto kind = h.at("kind").get<std::string>();
        if (kind == "continuous") {
          hp.kind = HpKind::continuous;
        } else if (kind == "integer") {
          hp.kind = HpKind::integer;
        } else {
          throw std::invalid_argument("unknown HP kind '" + kind + "' for " + hp.name);
        }
        hp.lower = h.at("lower").get<double>();
        hp.upper = h.at("upper").get<double>();
        algorithm.hps.push_back(std::move(hp));
      }
      module.algorithms.push_back(std::move(algorithm));
    }
    modules.push_back(std::move(module));
  }
  return SearchSpace(std::move(modules));
}

inline nlohmann::json space_to_json(const SearchSpace& space) {
  nlohmann::json modules = nlohmann::json::array();
  for (const auto& m : space.modules()) {
    nlohmann::json algorithms = nlohmann::json::array();
    for (const auto& a : m.algorithms) {
      nlohmann::json hps = nlohmann::json::array();
      for (const auto& h : a.hps) {
        hps.push_back({{"name", h.name},
                       {"kind", h.kind == HpKind::continuous ? "continuous" : "integer"},
                       {"lower", h.lower},
                       {"upper", h.upper}});
      }
      algorithms.push_back({{"name", a.name}, {"hps", std::move(hps)}});
    }
    modules.push_back({{"name", m.name}, {"algorithms", std::move(algorithms)}});
  }
  return {{"modules", std::move(modules)}};
}

}  // namespace cashadmm
