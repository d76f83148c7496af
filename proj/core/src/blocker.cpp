#include "fpclean/blocker.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "fpclean/error.hpp"

namespace fpclean {

namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one code point; malformed input yields kInvalid and skips a byte.
char32_t decode(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return kInvalid;
  }
  if (i + static_cast<std::size_t>(len) > s.size()) {
    ++i;
    return kInvalid;
  }
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_token_char(char32_t cp) {
  if (cp == kInvalid) return false;
  if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;  // feminine/masculine ordinal, micro
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20)) return false;
  return true;
}

char32_t fold(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0x80) return cp;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x100 && cp <= 0x137) return cp | 1;
  if (cp >= 0x139 && cp <= 0x148) return (cp & 1) ? cp + 1 : cp;
  if (cp >= 0x14A && cp <= 0x177) return cp | 1;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x179 && cp <= 0x17E) return (cp & 1) ? cp + 1 : cp;
  if (cp == 0x386) return 0x3AC;
  if (cp >= 0x388 && cp <= 0x38A) return cp + 37;
  if (cp == 0x38C) return 0x3CC;
  if (cp == 0x38E || cp == 0x38F) return cp + 63;
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  return cp;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = decode(text, i);
    if (is_token_char(cp)) {
      encode(fold(cp), current);
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<std::string> tokenize(const Record& r) {
  std::vector<std::string> out;
  for (const auto& [key, value] : r.attributes) {
    auto t = tokenize(value);
    out.insert(out.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
  }
  return out;
}

TokenTable build_token_table(const Dataset& ds, const BlockerOptions& options) {
  if (options.stop_fraction < 0) throw Error(ErrorCode::InvalidInput, "stop_fraction must be non-negative");
  TokenTable t;
  std::unordered_map<std::string, std::uint32_t> ids;
  t.record_tokens.resize(ds.size());
  for (std::uint32_t r = 0; r < ds.size(); ++r) {
    auto& toks = t.record_tokens[r];
    for (auto& tok : tokenize(ds[r])) {
      auto [it, inserted] = ids.emplace(tok, static_cast<std::uint32_t>(t.vocabulary.size()));
      if (inserted) t.vocabulary.push_back(std::move(tok));
      toks.push_back(it->second);
    }
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
  }
  t.df.assign(t.vocabulary.size(), 0);
  for (const auto& toks : t.record_tokens)
    for (auto id : toks) ++t.df[id];
  const double limit = std::max(options.stop_fraction * static_cast<double>(ds.size()),
                                static_cast<double>(options.min_stop_df));
  t.stop.resize(t.vocabulary.size());
  for (std::size_t i = 0; i < t.df.size(); ++i) t.stop[i] = static_cast<double>(t.df[i]) > limit;
  return t;
}

std::vector<CandidatePair> block_top_k(const Dataset& ds, const BlockerOptions& options) {
  if (options.k == 0) throw Error(ErrorCode::InvalidInput, "k must be at least 1");
  const TokenTable t = build_token_table(ds, options);
  std::vector<std::vector<std::uint32_t>> postings(t.vocabulary.size());
  for (std::uint32_t r = 0; r < ds.size(); ++r)
    for (auto id : t.record_tokens[r])
      if (!t.stop[id]) postings[id].push_back(r);

  std::map<std::pair<std::uint32_t, std::uint32_t>, CandidatePair> picked;
  std::vector<std::uint32_t> overlap(ds.size(), 0);
  std::vector<std::uint32_t> touched;
  for (std::uint32_t r = 0; r < ds.size(); ++r) {
    touched.clear();
    for (auto id : t.record_tokens[r]) {
      if (t.stop[id]) continue;
      for (auto other : postings[id]) {
        if (other == r) continue;
        if (overlap[other]++ == 0) touched.push_back(other);
      }
    }
    // Index order is record_id order, so comparing indices breaks ties by id.
    auto better = [&](std::uint32_t a, std::uint32_t b) {
      return overlap[a] != overlap[b] ? overlap[a] > overlap[b] : a < b;
    };
    const std::size_t take = std::min(options.k, touched.size());
    std::partial_sort(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(take), touched.end(), better);
    for (std::size_t rank = 0; rank < take; ++rank) {
      const std::uint32_t other = touched[rank];
      const auto key = std::minmax(r, other);
      auto [it, inserted] = picked.try_emplace({key.first, key.second});
      auto& cp = it->second;
      if (inserted) {
        cp.pair = RecordPair(ds[key.first].record_id, ds[key.second].record_id);
        cp.overlap = overlap[other];
      }
      (r == key.first ? cp.rank_for_a : cp.rank_for_b) = static_cast<std::uint32_t>(rank + 1);
    }
    for (auto other : touched) overlap[other] = 0;
  }

  std::vector<CandidatePair> out;
  out.reserve(picked.size());
  for (auto& [key, cp] : picked) out.push_back(std::move(cp));
  return out;
}

BlockingRecall blocking_recall(std::span<const CandidatePair> pairs, const GroundTruth& gt) {
  BlockingRecall r;
  r.total = gt.total_pairs();
  for (const auto& p : pairs)
    if (gt.same_entity(p.pair.first, p.pair.second)) ++r.found;
  r.recall = r.total == 0 ? 1.0 : static_cast<double>(r.found) / static_cast<double>(r.total);
  return r;
}

}  // namespace fpclean
