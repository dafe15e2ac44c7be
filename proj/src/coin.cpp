#include "bfactory/coin.hpp"

#include <numeric>
#include <string>

#include "bfactory/json_io.hpp"

namespace bfactory {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial) {
  return splitmix64(splitmix64(seed) ^ splitmix64(trial + 0x632be59bd9b4e019ULL));
}

Bias::Bias(Rational value) : value_(std::move(value)) {
  if (value_ < 0 || value_ > 1) throw UsageError("bias " + to_string(value_) + " outside [0,1]");
  if (value_ == 0) {
    kind_ = Kind::kZero;
    return;
  }
  if (value_ == 1) {
    kind_ = Kind::kOne;
    return;
  }
  const Integer& den = denominator(value_);
  if (boost::multiprecision::msb(den) < 64) {
    kind_ = Kind::kSmall;
    num_ = numerator(value_).convert_to<std::uint64_t>();
    den_ = den.convert_to<std::uint64_t>();
    unsigned __int128 scaled = static_cast<unsigned __int128>(num_) << 64;
    threshold_ = static_cast<std::uint64_t>(scaled / den_);
    remainder_ = static_cast<std::uint64_t>(scaled % den_);
  } else {
    kind_ = Kind::kLarge;
  }
}

bool Bias::draw(Engine& rng) const {
  switch (kind_) {
    case Kind::kZero:
      return false;
    case Kind::kOne:
      return true;
    case Kind::kLarge:
      return draw_large(rng);
    case Kind::kSmall:
      break;
  }
  std::uint64_t threshold = threshold_;
  std::uint64_t remainder = remainder_;
  for (;;) {
    std::uint64_t u = rng();
    if (u < threshold) return true;
    if (u > threshold) return false;
    // Tie on this word: continue with the next 64 bits of the expansion.
    unsigned __int128 scaled = static_cast<unsigned __int128>(remainder) << 64;
    threshold = static_cast<std::uint64_t>(scaled / den_);
    remainder = static_cast<std::uint64_t>(scaled % den_);
  }
}

bool Bias::draw_large(Engine& rng) const {
  Integer num = numerator(value_);
  const Integer& den = denominator(value_);
  for (;;) {
    Integer scaled = num << 64;
    Integer threshold = scaled / den;
    num = scaled % den;
    Integer u(rng());
    if (u < threshold) return true;
    if (u > threshold) return false;
  }
}

CoinBank::CoinBank(RationalVector biases, std::uint64_t seed)
    : seed_(seed), rng_(splitmix64(seed)), flip_counts_(biases.size(), 0) {
  biases_.reserve(biases.size());
  for (auto& b : biases) biases_.emplace_back(std::move(b));
}

CoinBank CoinBank::for_trial(const RationalVector& biases, std::uint64_t seed, std::uint64_t trial) {
  return CoinBank(biases, derive_seed(seed, trial));
}

bool CoinBank::flip(std::size_t coin) {
  if (coin >= biases_.size()) {
    throw UsageError("coin index " + std::to_string(coin + 1) + " out of range for " +
                     std::to_string(biases_.size()) + " coins");
  }
  ++flip_counts_[coin];
  return biases_[coin].draw(rng_);
}

bool CoinBank::flip_known(const Bias& bias) {
  if (bias.is_zero() || bias.is_one())
    throw UsageError("known-bias coin must have bias strictly inside (0,1)");
  ++helper_flips_;
  return bias.draw(rng_);
}

std::uint64_t CoinBank::input_flips() const {
  return std::accumulate(flip_counts_.begin(), flip_counts_.end(), std::uint64_t{0});
}

FlipBudget::FlipBudget(std::uint64_t max_flips) : max_(max_flips) {
  if (max_flips == 0) throw UsageError("flip budget must be positive");
}

void MeteredSource::charge() {
  if (used_ >= budget_.max_flips()) throw BudgetExhaustedSignal{used_};
  ++used_;
}

bool MeteredSource::flip(std::size_t coin) {
  charge();
  return inner_.flip(coin);
}

bool MeteredSource::flip_known(const Bias& bias) {
  charge();
  return inner_.flip_known(bias);
}

namespace {

const Bias& reciprocal(std::size_t k) {
  thread_local std::vector<std::optional<Bias>> cache;
  if (cache.size() <= k) cache.resize(k + 1);
  if (!cache[k]) cache[k].emplace(Rational(1, static_cast<long>(k)));
  return *cache[k];
}

}  // namespace

std::size_t uniform_index(CoinSource& source, std::size_t k) {
  if (k == 0) throw UsageError("uniform_index over an empty range");
  // Choose index i with probability 1/(k - i) among the remaining ones.
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (source.flip_known(reciprocal(k - i))) return i;
  }
  return k - 1;
}

RationalVector parse_bias_json(std::string_view json_text) {
  auto doc = parse_json(json_text);
  if (!doc.is_object() || !doc.contains("p")) throw UsageError("bias document needs a \"p\" array");
  RationalVector p = rational_vector_from_json(doc.at("p"));
  for (const auto& v : p) {
    if (!in_unit_interval(v)) throw UsageError("bias " + to_string(v) + " outside [0,1]");
  }
  return p;
}

}  // namespace bfactory
