#pragma once

#include "inflight/core/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace inflight {

struct MinHashParams {
  int num_hashes = 128;
  int shingle_size = 5;  // characters
  double threshold = 0.8;
  std::uint64_t seed = 0x6D696E68617368ULL;

  friend bool operator==(const MinHashParams&, const MinHashParams&) = default;
};

inline std::vector<std::string> validate_minhash_params(const MinHashParams& p) {
  std::vector<std::string> v;
  if (p.num_hashes < 1) v.push_back("dedup.num_hashes must be >= 1");
  if (p.shingle_size < 1) v.push_back("dedup.shingle_size must be >= 1");
  if (!(p.threshold > 0.0 && p.threshold < 1.0)) v.push_back("dedup.threshold must lie in (0, 1)");
  return v;
}

using Signature = std::vector<std::uint64_t>;

struct DegenerateText : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Lowercases ASCII letters and collapses whitespace runs to one space.
inline std::string normalize_for_shingles(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

/// 64-bit hashes of every character k-shingle of the normalized text.
inline std::vector<std::uint64_t> shingle_hashes(std::string_view text, int k) {
  const auto norm = normalize_for_shingles(text);
  const auto K = static_cast<std::size_t>(k);
  if (norm.size() < K) throw DegenerateText("text shorter than one shingle");
  std::vector<std::uint64_t> out;
  out.reserve(norm.size() - K + 1);
  for (std::size_t i = 0; i + K <= norm.size(); ++i) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (std::size_t j = 0; j < K; ++j) {
      h ^= static_cast<unsigned char>(norm[i + j]);
      h *= 0x100000001b3ULL;
    }
    out.push_back(mix64(h));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<std::uint64_t> hash_seeds(const MinHashParams& p) {
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(p.num_hashes));
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = derive_seed(p.seed, {i});
  return seeds;
}

inline Signature minhash_signature(std::string_view text, const MinHashParams& p = {}) {
  const auto shingles = shingle_hashes(text, p.shingle_size);
  const auto seeds = hash_seeds(p);
  Signature sig(seeds.size(), ~std::uint64_t{0});
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    std::uint64_t m = ~std::uint64_t{0};
    for (auto h : shingles) m = std::min(m, mix64(h ^ seeds[i]));
    sig[i] = m;
  }
  return sig;
}

inline double estimate_jaccard(const Signature& a, const Signature& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("signature lengths differ");
  std::size_t eq = 0;
  for (std::size_t i = 0; i < a.size(); ++i) eq += a[i] == b[i];
  return static_cast<double>(eq) / static_cast<double>(a.size());
}

/// Append-only signature store with linear-scan lookup. Insertions are
/// serialized; lookups take a shared lock.
class MinHashIndex {
 public:
  static constexpr std::uint32_t kSnapshotVersion = 1;

  explicit MinHashIndex(MinHashParams p = {}) : params_(p) {
    if (auto v = validate_minhash_params(p); !v.empty()) throw std::invalid_argument(v.front());
  }

  MinHashIndex(const MinHashIndex& o) : params_(o.params_) {
    std::shared_lock lock(o.mu_);
    ids_ = o.ids_;
    sigs_ = o.sigs_;
  }

  const MinHashParams& params() const { return params_; }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return ids_.size();
  }

  /// Id of the first stored signature at or above the threshold.
  std::optional<std::uint64_t> find_duplicate(const Signature& sig) const {
    std::shared_lock lock(mu_);
    return find_locked(sig);
  }

  /// True iff `sig` matches a stored signature; otherwise inserts it.
  bool is_duplicate(const Signature& sig, std::uint64_t id) {
    check_length(sig);
    std::unique_lock lock(mu_);
    if (find_locked(sig)) return true;
    ids_.push_back(id);
    sigs_.insert(sigs_.end(), sig.begin(), sig.end());
    return false;
  }

  void save(const std::string& path) const {
    std::shared_lock lock(mu_);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write snapshot " + path);
    out.write("IFMH", 4);
    put32(out, kSnapshotVersion);
    put32(out, static_cast<std::uint32_t>(params_.num_hashes));
    put32(out, static_cast<std::uint32_t>(params_.shingle_size));
    std::uint64_t tbits;
    std::memcpy(&tbits, &params_.threshold, sizeof tbits);
    put64(out, tbits);
    put64(out, params_.seed);
    put64(out, ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      put64(out, ids_[i]);
      for (std::size_t j = 0; j < width(); ++j) put64(out, sigs_[i * width() + j]);
    }
    if (!out) throw std::runtime_error("failed writing snapshot " + path);
  }

  static MinHashIndex load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read snapshot " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string_view(magic, 4) != "IFMH") throw std::runtime_error("not a MinHash snapshot: " + path);
    if (get32(in) != kSnapshotVersion) throw std::runtime_error("unsupported snapshot version");
    MinHashParams p;
    p.num_hashes = static_cast<int>(get32(in));
    p.shingle_size = static_cast<int>(get32(in));
    const std::uint64_t tbits = get64(in);
    std::memcpy(&p.threshold, &tbits, sizeof tbits);
    p.seed = get64(in);
    MinHashIndex idx(p);
    const std::uint64_t n = get64(in);
    for (std::uint64_t i = 0; i < n; ++i) {
      idx.ids_.push_back(get64(in));
      for (int j = 0; j < p.num_hashes; ++j) idx.sigs_.push_back(get64(in));
    }
    if (!in) throw std::runtime_error("truncated snapshot " + path);
    return idx;
  }

 private:
  std::size_t width() const { return static_cast<std::size_t>(params_.num_hashes); }

  void check_length(const Signature& sig) const {
    if (sig.size() != width()) throw std::invalid_argument("signature length does not match index");
  }

  std::optional<std::uint64_t> find_locked(const Signature& sig) const {
    check_length(sig);
    const std::size_t w = width();
    // Matches needed to reach the threshold.
    const auto need = static_cast<std::size_t>(std::ceil(params_.threshold * static_cast<double>(w) - 1e-9));
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      const std::uint64_t* s = &sigs_[i * w];
      std::size_t eq = 0;
      for (std::size_t j = 0; j < w; ++j) eq += s[j] == sig[j];
      if (eq >= need) return ids_[i];
    }
    return std::nullopt;
  }

  static void put32(std::ostream& o, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) o.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  static void put64(std::ostream& o, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) o.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  static std::uint32_t get32(std::istream& in) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in.get())) << (8 * i);
    return v;
  }
  static std::uint64_t get64(std::istream& in) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in.get())) << (8 * i);
    return v;
  }

  MinHashParams params_;
  mutable std::shared_mutex mu_;
  std::vector<std::uint64_t> ids_;
  std::vector<std::uint64_t> sigs_;  // row-major, num_hashes per entry
};

/// Groups of near-duplicate texts (estimated Jaccard >= threshold), found by
/// all-pairs comparison. Singletons are omitted. Degenerate texts are listed
/// separately by index.
struct DuplicateClusters {
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> degenerate;
};

inline DuplicateClusters find_duplicate_clusters(const std::vector<std::string>& texts,
                                                 const MinHashParams& p = {}) {
  DuplicateClusters out;
  std::vector<std::optional<Signature>> sigs;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      sigs.emplace_back(minhash_signature(texts[i], p));
    } catch (const DegenerateText&) {
      sigs.emplace_back(std::nullopt);
      out.degenerate.push_back(i);
    }
  }
  std::vector<std::size_t> parent(texts.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const auto need = static_cast<std::size_t>(std::ceil(p.threshold * p.num_hashes - 1e-9));
  for (std::size_t i = 0; i < texts.size(); ++i)
    for (std::size_t j = i + 1; j < texts.size(); ++j) {
      if (!sigs[i] || !sigs[j]) continue;
      std::size_t eq = 0;
      for (std::size_t k = 0; k < sigs[i]->size(); ++k) eq += (*sigs[i])[k] == (*sigs[j])[k];
      if (eq >= need) parent[find(j)] = find(i);
    }
  std::vector<std::vector<std::size_t>> groups(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i)
    if (sigs[i]) groups[find(i)].push_back(i);
  for (auto& g : groups)
    if (g.size() > 1) out.clusters.push_back(std::move(g));
  return out;
}

}  // namespace inflight
