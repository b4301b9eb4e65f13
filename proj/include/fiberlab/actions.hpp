#pragma once

// Coordinate actions: how a driving prefix alpha_0 ... alpha_{i-1} selects the
// fiber coordinate read at step i.
//
//   free-monoid  c_{i+1} = c_i . theta           (the prefix word itself)
//   z2           c_{i+1} = c_i + theta           (partial sums, R_n)
//   f2           c_{i+1} = theta . c_i, reduced  (left products, F_n)

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "fiberlab/driving.hpp"
#include "fiberlab/random.hpp"
#include "fiberlab/symbolic.hpp"

namespace fiberlab {

enum class ActionKind { free_monoid, z2, f2 };

inline std::string_view action_name(ActionKind kind) {
  switch (kind) {
    case ActionKind::free_monoid: return "free-monoid";
    case ActionKind::z2: return "z2";
    case ActionKind::f2: return "f2";
  }
  return "?";
}

inline ActionKind parse_action(std::string_view name) {
  if (name == "free-monoid") return ActionKind::free_monoid;
  if (name == "z2") return ActionKind::z2;
  if (name == "f2") return ActionKind::f2;
  throw std::invalid_argument("unknown action kind '" + std::string(name) + "'");
}

// Driving alphabet size the action requires; 0 means any.
inline std::size_t required_driving_size(ActionKind kind) { return kind == ActionKind::free_monoid ? 0 : 4; }

inline void check_driving_size(ActionKind kind, std::size_t size) {
  const std::size_t required = required_driving_size(kind);
  if (required != 0 && size != required)
    throw std::invalid_argument(std::string(action_name(kind)) + " action needs a 4-letter generator alphabet");
  if (size == 0 || size > max_alphabet_size) throw std::invalid_argument("driving alphabet size out of range");
}

// Generator letters come in inverse pairs (0,1), (2,3).
inline constexpr Letter inverse_generator(Letter g) noexcept { return static_cast<Letter>(g ^ 1u); }

struct LatticePoint {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
};

inline LatticePoint z2_generator(Letter g) {
  switch (g) {
    case 0: return {1, 0};
    case 1: return {-1, 0};
    case 2: return {0, 1};
    case 3: return {0, -1};
  }
  throw std::invalid_argument("not a Z2 generator");
}

// A coordinate as a plain value. Words are stored left to right; free-group
// words are always reduced.
class CoordinateAction {
public:
  using State = std::variant<std::vector<Letter>, LatticePoint>;

  static CoordinateAction identity(ActionKind kind, std::size_t driving_size) {
    check_driving_size(kind, driving_size);
    if (kind == ActionKind::z2) return CoordinateAction(kind, driving_size, LatticePoint{});
    return CoordinateAction(kind, driving_size, std::vector<Letter>{});
  }

  ActionKind kind() const noexcept { return kind_; }
  const State& state() const noexcept { return state_; }
  const std::vector<Letter>& word() const { return std::get<std::vector<Letter>>(state_); }
  const LatticePoint& point() const { return std::get<LatticePoint>(state_); }

  CoordinateAction step(Letter theta) const {
    if (theta >= driving_size_) throw std::invalid_argument("symbol outside the driving alphabet");
    CoordinateAction next = *this;
    switch (kind_) {
      case ActionKind::free_monoid:
        std::get<std::vector<Letter>>(next.state_).push_back(theta);
        break;
      case ActionKind::z2: {
        auto& p = std::get<LatticePoint>(next.state_);
        const auto g = z2_generator(theta);
        p.x += g.x;
        p.y += g.y;
        break;
      }
      case ActionKind::f2: {
        auto& w = std::get<std::vector<Letter>>(next.state_);
        if (!w.empty() && w.front() == inverse_generator(theta))
          w.erase(w.begin());
        else
          w.insert(w.begin(), theta);
        break;
      }
    }
    return next;
  }

  friend bool operator==(const CoordinateAction& a, const CoordinateAction& b) {
    return a.kind_ == b.kind_ && a.state_ == b.state_;
  }

private:
  CoordinateAction(ActionKind kind, std::size_t driving_size, State state)
      : kind_(kind), driving_size_(driving_size), state_(std::move(state)) {}

  ActionKind kind_;
  std::size_t driving_size_;
  State state_;
};

// Freely reduce a word over {a, A, b, B}.
inline std::vector<Letter> free_reduce(std::span<const Letter> word) {
  std::vector<Letter> out;
  for (Letter l : word) {
    if (!out.empty() && out.back() == inverse_generator(l))
      out.pop_back();
    else
      out.push_back(l);
  }
  return out;
}

inline bool is_uncancellable(std::span<const Letter> word) {
  for (std::size_t i = 1; i < word.size(); ++i)
    if (word[i] == inverse_generator(word[i - 1])) return false;
  return true;
}

using CoordinateId = std::uint32_t;

// Interns the coordinates reached during a walk. Ids are dense and exact;
// key() is a hash of the canonical form, independent of visiting order, used
// to seed per-coordinate draws.
//
// Word coordinates live in a trie. Free-group words are stored reversed so
// that left multiplication extends or retracts the path at its end.
class CoordinateSpace {
public:
  CoordinateSpace(ActionKind kind, std::size_t driving_size) : kind_(kind), driving_size_(driving_size) {
    check_driving_size(kind, driving_size);
    if (kind_ == ActionKind::z2) {
      points_.push_back({});
      point_ids_.emplace(LatticePoint{}, 0);
    } else {
      nodes_.push_back({0, 0, 0x5EEDC0DE5EEDC0DEull});
    }
  }

  ActionKind kind() const noexcept { return kind_; }
  std::size_t driving_size() const noexcept { return driving_size_; }
  static constexpr CoordinateId identity() noexcept { return 0; }
  std::size_t size() const noexcept { return kind_ == ActionKind::z2 ? points_.size() : nodes_.size(); }

  CoordinateId step(CoordinateId id, Letter theta) {
    if (theta >= driving_size_) throw std::invalid_argument("symbol outside the driving alphabet");
    switch (kind_) {
      case ActionKind::free_monoid:
        return child(id, theta);
      case ActionKind::f2:
        if (id != identity() && nodes_[id].letter == inverse_generator(theta)) return nodes_[id].parent;
        return child(id, theta);
      case ActionKind::z2: {
        const auto g = z2_generator(theta);
        const LatticePoint p{points_[id].x + g.x, points_[id].y + g.y};
        auto [it, inserted] = point_ids_.try_emplace(p, static_cast<CoordinateId>(points_.size()));
        if (inserted) points_.push_back(p);
        return it->second;
      }
    }
    return id;
  }

  std::uint64_t key(CoordinateId id) const {
    if (kind_ == ActionKind::z2) return point_key(points_[id]);
    return nodes_[id].hash;
  }

  CoordinateAction coordinate(CoordinateId id) const {
    CoordinateAction c = CoordinateAction::identity(kind_, driving_size_);
    if (kind_ == ActionKind::z2) {
      // Rebuild through generator steps so the value type stays the only
      // constructor of coordinates.
      const auto p = points_[id];
      for (std::int64_t i = 0; i < std::abs(p.x); ++i) c = c.step(p.x > 0 ? 0 : 1);
      for (std::int64_t i = 0; i < std::abs(p.y); ++i) c = c.step(p.y > 0 ? 2 : 3);
      return c;
    }
    std::vector<Letter> path;
    for (CoordinateId cur = id; cur != identity(); cur = nodes_[cur].parent) path.push_back(nodes_[cur].letter);
    // Trie paths list letters in application order for both word actions:
    // appending for the free monoid, left multiplication for F2.
    for (auto it = path.rbegin(); it != path.rend(); ++it) c = c.step(*it);
    return c;
  }

  LatticePoint point(CoordinateId id) const { return points_.at(id); }

private:
  struct Node {
    CoordinateId parent;
    Letter letter;
    std::uint64_t hash;
  };

  static std::uint64_t point_key(LatticePoint p) {
    return splitmix64(splitmix64(static_cast<std::uint64_t>(p.x)) ^ (static_cast<std::uint64_t>(p.y) * 0xD6E8FEB86659FD93ull));
  }

  CoordinateId child(CoordinateId id, Letter theta) {
    const std::uint64_t edge = (static_cast<std::uint64_t>(id) << 8) | theta;
    auto [it, inserted] = children_.try_emplace(edge, static_cast<CoordinateId>(nodes_.size()));
    if (inserted) {
      if (nodes_.size() >= std::numeric_limits<CoordinateId>::max()) throw resource_limit("too many coordinates");
      nodes_.push_back({id, theta, splitmix64(nodes_[id].hash ^ (std::uint64_t{theta} + 1) * 0x9E3779B97F4A7C15ull)});
    }
    return it->second;
  }

  ActionKind kind_;
  std::size_t driving_size_;
  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, CoordinateId> children_;
  std::vector<LatticePoint> points_;
  struct PointHash {
    std::size_t operator()(const LatticePoint& p) const noexcept { return point_key(p); }
  };
  std::unordered_map<LatticePoint, CoordinateId, PointHash> point_ids_;
};

// Coordinates c_0, ..., c_{n-1} visited along a driving word of length n.
struct VisitRecord {
  std::shared_ptr<const CoordinateSpace> space;
  std::vector<CoordinateId> ids;
  std::size_t distinct_count = 0;

  std::size_t size() const noexcept { return ids.size(); }
  CoordinateAction coordinate(std::size_t i) const { return space->coordinate(ids.at(i)); }
};

inline VisitRecord visit_record(ActionKind kind, std::span<const Letter> alpha, std::size_t driving_size) {
  auto space = std::make_shared<CoordinateSpace>(kind, driving_size);
  VisitRecord rec;
  rec.ids.reserve(alpha.size());
  std::vector<bool> seen;
  CoordinateId cur = CoordinateSpace::identity();
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (i > 0) cur = space->step(cur, alpha[i - 1]);
    rec.ids.push_back(cur);
    if (seen.size() <= cur) seen.resize(space->size(), false);
    if (!seen[cur]) {
      seen[cur] = true;
      ++rec.distinct_count;
    }
  }
  rec.space = std::move(space);
  return rec;
}

inline VisitRecord visit_record(ActionKind kind, const Word& alpha) {
  return visit_record(kind, alpha.letters(), alpha.alphabet().size());
}

// Relabels coordinates of a block by first occurrence: labels[i] == labels[j]
// exactly when the block visits the same coordinate at steps i and j.
struct CoincidencePattern {
  std::vector<std::uint32_t> labels;
  std::size_t distinct = 0;
  friend auto operator<=>(const CoincidencePattern&, const CoincidencePattern&) = default;
};

inline CoincidencePattern coincidence_pattern(std::span<const CoordinateId> ids) {
  CoincidencePattern pat;
  pat.labels.reserve(ids.size());
  std::vector<std::pair<CoordinateId, std::uint32_t>> seen;
  for (CoordinateId id : ids) {
    auto it = std::find_if(seen.begin(), seen.end(), [id](const auto& e) { return e.first == id; });
    if (it == seen.end()) {
      seen.emplace_back(id, static_cast<std::uint32_t>(seen.size()));
      pat.labels.push_back(seen.back().second);
    } else {
      pat.labels.push_back(it->second);
    }
  }
  pat.distinct = seen.size();
  return pat;
}

inline CoincidencePattern coincidence_pattern(ActionKind kind, std::span<const Letter> u, std::size_t driving_size) {
  if (kind == ActionKind::free_monoid) {
    CoincidencePattern pat;
    for (std::size_t i = 0; i < u.size(); ++i) pat.labels.push_back(static_cast<std::uint32_t>(i));
    pat.distinct = u.size();
    return pat;
  }
  return coincidence_pattern(visit_record(kind, u, driving_size).ids);
}

// Decade checkpoints 1, 10, 100, ... not exceeding n, plus n itself.
inline std::vector<std::size_t> log_checkpoints(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t c = 1; c <= n; c *= 10) {
    out.push_back(c);
    if (c > n / 10) break;
  }
  if (n > 0 && (out.empty() || out.back() != n)) out.push_back(n);
  return out;
}

struct RangePoint {
  std::size_t n = 0;
  double mean_ratio = 0.0;  // mean over seeds of distinct_count / n
};

// Driving and fiber streams of one experiment run.
struct RunSeeds {
  std::uint64_t driving;
  std::uint64_t fiber;
};

inline RunSeeds run_seeds(std::uint64_t seed) { return {derive_seed(seed, 0), derive_seed(seed, 1)}; }

inline std::vector<RangePoint> range_ratio_curve(ActionKind kind, const MarkovChainSpec& spec, std::size_t n,
                                                 std::span<const std::uint64_t> seeds) {
  check_driving_size(kind, spec.size());
  const auto checkpoints = log_checkpoints(n);
  std::vector<double> sums(checkpoints.size(), 0.0);
  for (std::uint64_t seed : seeds) {
    const auto alpha = sample_trajectory(spec, n, run_seeds(seed).driving);
    CoordinateSpace space(kind, spec.size());
    std::vector<bool> seen;
    std::size_t distinct = 0;
    std::size_t next = 0;
    CoordinateId cur = CoordinateSpace::identity();
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) cur = space.step(cur, alpha.letters[i - 1]);
      if (seen.size() <= cur) seen.resize(space.size(), false);
      if (!seen[cur]) {
        seen[cur] = true;
        ++distinct;
      }
      if (i + 1 == checkpoints[next]) {
        sums[next] += static_cast<double>(distinct) / static_cast<double>(i + 1);
        ++next;
      }
    }
  }
  std::vector<RangePoint> curve;
  for (std::size_t j = 0; j < checkpoints.size(); ++j)
    curve.push_back({checkpoints[j], seeds.empty() ? 0.0 : sums[j] / static_cast<double>(seeds.size())});
  return curve;
}

}  // namespace fiberlab
