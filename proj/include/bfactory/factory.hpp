#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bfactory/coin.hpp"
#include "bfactory/face.hpp"
#include "bfactory/json_io.hpp"
#include "bfactory/rational.hpp"

namespace bfactory {

/// An explicit finite factory: a binary tree whose internal nodes flip an
/// input coin or a known-bias helper coin, taking the `zero` child on outcome 0
/// and the `one` child on outcome 1.
class FiniteTree {
 public:
  using NodeId = std::uint32_t;

  struct Leaf {
    bool value;
  };
  struct CoinNode {
    std::size_t coin;  // 0-based input coin
    NodeId zero;
    NodeId one;
  };
  struct BiasNode {
    Bias bias;  // strictly inside (0,1)
    NodeId zero;
    NodeId one;
  };
  using Node = std::variant<Leaf, CoinNode, BiasNode>;

  static FiniteTree leaf(bool value);
  static FiniteTree coin(std::size_t coin, const FiniteTree& zero, const FiniteTree& one);
  static FiniteTree bias(const Rational& bias, const FiniteTree& zero, const FiniteTree& one);

  NodeId root() const { return 0; }
  const Node& node(NodeId id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

  /// One more than the largest input coin index used (0 when none).
  std::size_t arity() const;

  /// Same shape with every leaf label flipped.
  FiniteTree complemented() const;

  /// Replaces every 1-leaf by a copy of `other` (conjunction of independent runs).
  FiniteTree graft_on_ones(const FiniteTree& other) const;

  /// `{"leaf": 0|1}`, `{"node": {"coin": 1, "zero": ..., "one": ...}}` or
  /// `{"node": {"bias": "1/3", "zero": ..., "one": ...}}`; coins are 1-based.
  static FiniteTree from_json(const Json& json);
  Json to_json() const;

 private:
  // Appends `other` with shifted ids; returns the new id of its root.
  NodeId append(const FiniteTree& other);
  Json node_json(NodeId id) const;

  std::vector<Node> nodes_;
};

/// A sampler that consumes flips from a coin source and returns one bit.
/// It must be a pure function of the flips it observes.
using Sampler = std::function<bool(CoinSource&)>;

/// An executable factory: a finite tree, or a procedural sampler with no a-priori depth bound.
class Program {
 public:
  static Program finite(FiniteTree tree);
  static Program procedural(std::size_t arity, Sampler sampler, std::string name = "procedural");

  std::size_t arity() const { return arity_; }
  const std::string& name() const { return name_; }

  /// Present for finite programs.
  const FiniteTree* tree() const { return tree_.get(); }

  /// Runs once against `source`, without any budget.
  bool sample(CoinSource& source) const;

 private:
  Program() = default;

  std::shared_ptr<const FiniteTree> tree_;
  Sampler sampler_;
  std::size_t arity_ = 0;
  std::string name_;
};

struct Outcome {
  enum class Kind : std::uint8_t { kZero, kOne, kBudgetExhausted };

  Kind kind;
  std::uint64_t flips_used;

  bool exhausted() const { return kind == Kind::kBudgetExhausted; }
  bool one() const { return kind == Kind::kOne; }
};

/// Executes `program` against `source`, charging every flip to `budget`.
Outcome run(const Program& program, CoinSource& source, const FlipBudget& budget);

/// Exact P_p[output = 1] of a finite tree.
Rational exact_eval(const FiniteTree& tree, const RationalVector& p);

struct TruncatedBounds {
  Rational lower;  // mass of transcripts of length <= depth ending in a 1-leaf
  Rational upper;  // 1 - mass of transcripts of length <= depth ending in a 0-leaf
};

inline constexpr std::uint64_t kDefaultTranscriptWorkLimit = std::uint64_t{1} << 20;

/// Bounds on the output probability from all flip transcripts of length <= depth.
/// Helper flips count toward the depth; their probabilities enter as exact weights.
TruncatedBounds truncated_bounds(const Program& program, const RationalVector& p, std::size_t depth,
                                 std::uint64_t work_limit = kDefaultTranscriptWorkLimit);

/// One root-to-1-leaf path: coeff * prod_i p_i^{p_power_i} (1-p_i)^{q_power_i}.
///
/// `p_power` counts 1-edges taken after flipping coin i and `q_power` counts
/// 0-edges, so the monomial is the path's probability.
struct BernsteinMonomial {
  Rational coeff;
  std::vector<unsigned> p_power;
  std::vector<unsigned> q_power;

  Rational evaluate(const RationalVector& p) const;
};

/// One monomial per 1-leaf, over `arity` coins (defaults to the tree's arity).
std::vector<BernsteinMonomial> leaf_monomials(const FiniteTree& tree, std::size_t arity = 0);

struct FaceCertificate {
  Rational c;
  unsigned m;
};

/// A lower bound f(p) >= c * face_poly(face, p)^m taken from a single 1-leaf
/// path that is reachable on the open face; absent when no such path exists.
std::optional<FaceCertificate> face_certificate(const FiniteTree& tree, const FacePartition& face);

/// The p1 p2 (1 - p3) tree: flip `coins[0]`, `coins[1]` and `coins[2]`, output 1 iff they read 1, 1, 0.
FiniteTree cubic_example_tree(std::array<std::size_t, 3> coins = {0, 0, 0});

}  // namespace bfactory
