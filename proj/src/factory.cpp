#include "bfactory/factory.hpp"

#include <algorithm>

namespace bfactory {

// ---------------------------------------------------------------------------
// FiniteTree

FiniteTree FiniteTree::leaf(bool value) {
  FiniteTree t;
  t.nodes_.push_back(Leaf{value});
  return t;
}

FiniteTree FiniteTree::coin(std::size_t coin, const FiniteTree& zero, const FiniteTree& one) {
  FiniteTree t;
  t.nodes_.push_back(CoinNode{coin, 0, 0});
  NodeId z = t.append(zero);
  NodeId o = t.append(one);
  std::get<CoinNode>(t.nodes_[0]) = CoinNode{coin, z, o};
  return t;
}

FiniteTree FiniteTree::bias(const Rational& bias, const FiniteTree& zero, const FiniteTree& one) {
  if (bias <= 0 || bias >= 1)
    throw UsageError("helper coin bias " + to_string(bias) + " must lie strictly inside (0,1)");
  FiniteTree t;
  t.nodes_.push_back(BiasNode{Bias(bias), 0, 0});
  NodeId z = t.append(zero);
  NodeId o = t.append(one);
  auto& node = std::get<BiasNode>(t.nodes_[0]);
  node.zero = z;
  node.one = o;
  return t;
}

FiniteTree::NodeId FiniteTree::append(const FiniteTree& other) {
  const auto offset = static_cast<NodeId>(nodes_.size());
  for (const auto& n : other.nodes_) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Leaf>) {
            nodes_.push_back(node);
          } else {
            T copy = node;
            copy.zero += offset;
            copy.one += offset;
            nodes_.push_back(copy);
          }
        },
        n);
  }
  return offset;
}

std::size_t FiniteTree::arity() const {
  std::size_t arity = 0;
  for (const auto& n : nodes_) {
    if (const auto* c = std::get_if<CoinNode>(&n)) arity = std::max(arity, c->coin + 1);
  }
  return arity;
}

FiniteTree FiniteTree::complemented() const {
  FiniteTree t = *this;
  for (auto& n : t.nodes_) {
    if (auto* l = std::get_if<Leaf>(&n)) l->value = !l->value;
  }
  return t;
}

FiniteTree FiniteTree::graft_on_ones(const FiniteTree& other) const {
  FiniteTree t = *this;
  // Every original 1-leaf is redirected to one shared appended copy of `other`.
  // Sharing is safe: the structure stays a DAG that unfolds to the grafted tree.
  const auto original = static_cast<NodeId>(t.nodes_.size());
  if (const auto* l = std::get_if<Leaf>(&t.nodes_[0]); l != nullptr) {
    return l->value ? other : t;
  }
  NodeId copy = t.append(other);
  for (NodeId id = 0; id < original; ++id) {
    std::visit(
        [&](auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (!std::is_same_v<T, Leaf>) {
            for (NodeId* child : {&node.zero, &node.one}) {
              if (const auto* l = std::get_if<Leaf>(&t.nodes_[*child]); l != nullptr && l->value) *child = copy;
            }
          }
        },
        t.nodes_[id]);
  }
  return t;
}

FiniteTree FiniteTree::from_json(const Json& json) {
  if (!json.is_object()) throw UsageError("tree node must be a JSON object: " + json.dump());
  if (json.contains("leaf")) {
    const auto& v = json.at("leaf");
    if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
      throw UsageError("leaf label must be 0 or 1, got " + v.dump());
    return leaf(v.get<int>() == 1);
  }
  if (!json.contains("node")) throw UsageError("tree node needs \"leaf\" or \"node\": " + json.dump());
  const auto& node = json.at("node");
  if (!node.contains("zero") || !node.contains("one"))
    throw UsageError("internal node needs both \"zero\" and \"one\" children");
  FiniteTree zero = from_json(node.at("zero"));
  FiniteTree one = from_json(node.at("one"));
  if (node.contains("coin")) {
    const auto& c = node.at("coin");
    if (!c.is_number_integer() || c.get<long long>() < 1) throw UsageError("coin index must be >= 1");
    return coin(static_cast<std::size_t>(c.get<long long>() - 1), zero, one);
  }
  if (node.contains("bias")) return bias(rational_from_json(node.at("bias")), zero, one);
  throw UsageError("internal node needs a \"coin\" or \"bias\" label");
}

Json FiniteTree::node_json(NodeId id) const {
  return std::visit(
      [&](const auto& node) -> Json {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Leaf>) {
          return Json{{"leaf", node.value ? 1 : 0}};
        } else {
          Json inner;
          if constexpr (std::is_same_v<T, CoinNode>) {
            inner["coin"] = node.coin + 1;
          } else {
            inner["bias"] = to_string(node.bias.value());
          }
          inner["zero"] = node_json(node.zero);
          inner["one"] = node_json(node.one);
          return Json{{"node", inner}};
        }
      },
      nodes_[id]);
}

Json FiniteTree::to_json() const { return node_json(root()); }

// ---------------------------------------------------------------------------
// Program

Program Program::finite(FiniteTree tree) {
  Program p;
  p.arity_ = tree.arity();
  p.tree_ = std::make_shared<const FiniteTree>(std::move(tree));
  p.name_ = "tree";
  return p;
}

Program Program::procedural(std::size_t arity, Sampler sampler, std::string name) {
  if (!sampler) throw UsageError("procedural program needs a sampler");
  Program p;
  p.arity_ = arity;
  p.sampler_ = std::move(sampler);
  p.name_ = std::move(name);
  return p;
}

bool Program::sample(CoinSource& source) const {
  if (!tree_) return sampler_(source);
  const FiniteTree& t = *tree_;
  FiniteTree::NodeId id = t.root();
  for (;;) {
    const auto& n = t.node(id);
    if (const auto* l = std::get_if<FiniteTree::Leaf>(&n)) return l->value;
    if (const auto* c = std::get_if<FiniteTree::CoinNode>(&n)) {
      id = source.flip(c->coin) ? c->one : c->zero;
    } else {
      const auto& b = std::get<FiniteTree::BiasNode>(n);
      id = source.flip_known(b.bias) ? b.one : b.zero;
    }
  }
}

Outcome run(const Program& program, CoinSource& source, const FlipBudget& budget) {
  if (program.arity() > source.num_coins()) {
    throw UsageError("program references coin " + std::to_string(program.arity()) + " but only " +
                     std::to_string(source.num_coins()) + " coins are available");
  }
  MeteredSource metered(source, budget);
  try {
    bool bit = program.sample(metered);
    return Outcome{bit ? Outcome::Kind::kOne : Outcome::Kind::kZero, metered.flips_used()};
  } catch (const BudgetExhaustedSignal& signal) {
    return Outcome{Outcome::Kind::kBudgetExhausted, signal.flips_used};
  }
}

// ---------------------------------------------------------------------------
// Exact evaluation

namespace {

void check_point(const FiniteTree& tree, const RationalVector& p) {
  if (p.size() < tree.arity())
    throw UsageError("point has " + std::to_string(p.size()) + " coordinates, tree needs " +
                     std::to_string(tree.arity()));
  if (!in_unit_cube(p)) throw UsageError("point " + to_string(p) + " is outside [0,1]^n");
}

Rational eval_node(const FiniteTree& tree, FiniteTree::NodeId id, const RationalVector& p) {
  const auto& n = tree.node(id);
  if (const auto* l = std::get_if<FiniteTree::Leaf>(&n)) return l->value ? Rational(1) : Rational(0);
  if (const auto* c = std::get_if<FiniteTree::CoinNode>(&n)) {
    const Rational& q = p[c->coin];
    Rational out = 0;
    if (q != 1) out += (1 - q) * eval_node(tree, c->zero, p);
    if (q != 0) out += q * eval_node(tree, c->one, p);
    return out;
  }
  const auto& b = std::get<FiniteTree::BiasNode>(n);
  const Rational& q = b.bias.value();
  return (1 - q) * eval_node(tree, b.zero, p) + q * eval_node(tree, b.one, p);
}

}  // namespace

Rational exact_eval(const FiniteTree& tree, const RationalVector& p) {
  check_point(tree, p);
  return eval_node(tree, tree.root(), p);
}

// ---------------------------------------------------------------------------
// Truncated transcript enumeration

namespace {

struct DepthReached {};
struct ZeroMass {};

// Replays a program along a recorded prefix of outcomes, extending it with 0s.
class TranscriptReplay final : public CoinSource {
 public:
  TranscriptReplay(const RationalVector& p, std::vector<std::uint8_t>& path, std::size_t depth,
                   std::uint64_t& work, std::uint64_t work_limit)
      : p_(p), path_(path), depth_(depth), work_(work), work_limit_(work_limit) {}

  std::size_t num_coins() const override { return p_.size(); }
  bool flip(std::size_t coin) override {
    if (coin >= p_.size()) throw UsageError("program references coin beyond the point's dimension");
    return step(p_[coin]);
  }
  bool flip_known(const Bias& bias) override { return step(bias.value()); }

  std::size_t position() const { return pos_; }
  const Rational& weight() const { return weight_; }

 private:
  bool step(const Rational& prob) {
    if (pos_ == depth_) throw DepthReached{};
    if (++work_ > work_limit_)
      throw ResourceError("truncated_bounds exceeded the work limit of " + std::to_string(work_limit_) +
                          " transcript-weight evaluations");
    if (pos_ == path_.size()) path_.push_back(0);
    bool bit = path_[pos_++] != 0;
    weight_ *= bit ? prob : 1 - prob;
    if (weight_ == 0) throw ZeroMass{};
    return bit;
  }

  const RationalVector& p_;
  std::vector<std::uint8_t>& path_;
  std::size_t depth_;
  std::uint64_t& work_;
  std::uint64_t work_limit_;
  std::size_t pos_ = 0;
  Rational weight_ = 1;
};

}  // namespace

TruncatedBounds truncated_bounds(const Program& program, const RationalVector& p, std::size_t depth,
                                 std::uint64_t work_limit) {
  if (depth == 0) throw UsageError("truncated_bounds depth must be positive");
  if (p.size() < program.arity()) throw UsageError("point dimension is smaller than the program's arity");
  if (!in_unit_cube(p)) throw UsageError("point " + to_string(p) + " is outside [0,1]^n");

  Rational one_mass = 0;
  Rational zero_mass = 0;
  std::vector<std::uint8_t> path;
  std::uint64_t work = 0;
  for (;;) {
    TranscriptReplay replay(p, path, depth, work, work_limit);
    try {
      bool out = program.sample(replay);
      (out ? one_mass : zero_mass) += replay.weight();
    } catch (const DepthReached&) {
    } catch (const ZeroMass&) {
    }
    path.resize(replay.position());
    while (!path.empty() && path.back() == 1) path.pop_back();
    if (path.empty()) break;
    path.back() = 1;
  }
  return TruncatedBounds{one_mass, 1 - zero_mass};
}

// ---------------------------------------------------------------------------
// Path monomials

Rational BernsteinMonomial::evaluate(const RationalVector& p) const {
  Rational value = coeff;
  for (std::size_t i = 0; i < p_power.size(); ++i) {
    if (p_power[i]) value *= pow(p[i], p_power[i]);
    if (q_power[i]) value *= pow(1 - p[i], q_power[i]);
  }
  return value;
}

namespace {

void collect(const FiniteTree& tree, FiniteTree::NodeId id, BernsteinMonomial& current,
             std::vector<BernsteinMonomial>& out) {
  const auto& n = tree.node(id);
  if (const auto* l = std::get_if<FiniteTree::Leaf>(&n)) {
    if (l->value) out.push_back(current);
    return;
  }
  if (const auto* c = std::get_if<FiniteTree::CoinNode>(&n)) {
    ++current.q_power[c->coin];
    collect(tree, c->zero, current, out);
    --current.q_power[c->coin];
    ++current.p_power[c->coin];
    collect(tree, c->one, current, out);
    --current.p_power[c->coin];
    return;
  }
  const auto& b = std::get<FiniteTree::BiasNode>(n);
  Rational saved = current.coeff;
  current.coeff = saved * (1 - b.bias.value());
  collect(tree, b.zero, current, out);
  current.coeff = saved * b.bias.value();
  collect(tree, b.one, current, out);
  current.coeff = saved;
}

}  // namespace

std::vector<BernsteinMonomial> leaf_monomials(const FiniteTree& tree, std::size_t arity) {
  arity = std::max(arity, tree.arity());
  BernsteinMonomial current{1, std::vector<unsigned>(arity, 0), std::vector<unsigned>(arity, 0)};
  std::vector<BernsteinMonomial> out;
  collect(tree, tree.root(), current, out);
  return out;
}

std::optional<FaceCertificate> face_certificate(const FiniteTree& tree, const FacePartition& face) {
  if (tree.arity() > face.dimension())
    throw UsageError("face has fewer coordinates than the tree references");
  std::optional<FaceCertificate> best;
  for (const auto& mono : leaf_monomials(tree, face.dimension())) {
    bool reachable = true;
    unsigned m = 0;
    for (std::size_t i = 0; i < face.dimension(); ++i) {
      // A 1-edge on a zero coordinate, or a 0-edge on a one coordinate, has probability 0.
      if (face.role(i) == FaceRole::kZero && mono.p_power[i] > 0) reachable = false;
      if (face.role(i) == FaceRole::kOne && mono.q_power[i] > 0) reachable = false;
      m = std::max({m, mono.p_power[i], mono.q_power[i]});
    }
    if (!reachable) continue;
    if (!best || m < best->m || (m == best->m && mono.coeff > best->c)) best = FaceCertificate{mono.coeff, m};
  }
  return best;
}

FiniteTree cubic_example_tree(std::array<std::size_t, 3> coins) {
  FiniteTree zero = FiniteTree::leaf(false);
  FiniteTree one = FiniteTree::leaf(true);
  FiniteTree third = FiniteTree::coin(coins[2], one, zero);
  FiniteTree second = FiniteTree::coin(coins[1], zero, third);
  return FiniteTree::coin(coins[0], zero, second);
}

}  // namespace bfactory
