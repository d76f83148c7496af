#include "fpclean/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <numeric>

#include "fpclean/error.hpp"
#include "fpclean/random.hpp"

namespace fpclean {

namespace {

constexpr std::array<std::string_view, 32> kSyllables = {
    "ka", "lo", "mi", "ner", "tas", "vo", "ri", "den", "sul", "bra", "kel", "mon", "ta", "zu", "fen", "gor",
    "hal", "ip", "jor", "lun", "mar", "nov", "ost", "pel", "quin", "ros", "sev", "tor", "ul", "ven", "wik", "yar"};
constexpr std::array<std::string_view, 10> kSuffixes = {"GmbH", "Inc", "Ltd", "AG", "Corp", "LLC", "SA", "BV", "Group", "Holding"};
constexpr std::array<std::string_view, 40> kCities = {
    "Zürich",  "Berlin",    "Paris",   "Madrid",   "Lisbon",   "Vienna",  "Prague", "Warsaw", "Oslo",     "Helsinki",
    "Dublin",  "Brussels",  "Lyon",    "Munich",   "Hamburg",  "Geneva",  "Basel",  "Milan",  "Turin",    "Porto",
    "Seville", "Valencia",  "Krakow",  "Gdansk",   "Bergen",   "Aarhus",  "Malmö",  "Tallinn", "Riga",    "Vilnius",
    "Athens",  "Sofia",     "Bucharest", "Zagreb", "Ljubljana", "Graz",   "Linz",   "Bremen", "Dresden",  "Leipzig"};

// Each source names its fields differently, as heterogeneous sources do.
constexpr std::array<std::array<std::string_view, 3>, 5> kFieldNames = {{
    {"name", "city", "code"},
    {"company_name", "location", "registry_id"},
    {"title", "town", "id_code"},
    {"org", "municipality", "ref"},
    {"label", "seat", "number"},
}};

std::string capitalized(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 32);
  return s;
}

std::string make_word(Rng& rng) {
  std::string w;
  const auto n = 2 + rng.below(2);
  for (std::uint64_t i = 0; i < n; ++i) w += kSyllables[rng.below(kSyllables.size())];
  return capitalized(w);
}

std::string make_value(FieldKind kind, Rng& rng) {
  switch (kind) {
    case FieldKind::Name: {
      std::string v = make_word(rng) + " " + make_word(rng);
      if (rng.bernoulli(0.5)) v += " " + make_word(rng);
      return v + " " + std::string(kSuffixes[rng.below(kSuffixes.size())]);
    }
    case FieldKind::City: return std::string(kCities[rng.below(kCities.size())]);
    case FieldKind::Code: {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%c%c%05u", static_cast<char>('A' + rng.below(26)),
                    static_cast<char>('A' + rng.below(26)), static_cast<unsigned>(rng.below(100000)));
      return buf;
    }
  }
  return {};
}

std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Character edits work on ASCII bytes only so multi-byte letters stay intact.
bool ascii(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

std::string perturb(const std::string& value, const Perturbation& p, Rng& rng) {
  if (rng.bernoulli(p.field_blank)) return {};
  auto tokens = split_spaces(value);
  if (tokens.size() > 1) {
    std::vector<std::string> kept;
    for (auto& t : tokens)
      if (!rng.bernoulli(p.token_drop)) kept.push_back(std::move(t));
    if (kept.empty()) kept.push_back(split_spaces(value).front());
    tokens = std::move(kept);
  }
  if (tokens.size() > 1 && rng.bernoulli(p.token_reorder)) {
    const auto i = rng.below(tokens.size() - 1);
    std::swap(tokens[i], tokens[i + 1]);
  }
  for (auto& t : tokens) {
    if (t.size() >= 2 && ascii(t) && rng.bernoulli(p.char_swap)) {
      const auto i = rng.below(t.size() - 1);
      std::swap(t[i], t[i + 1]);
    }
    if (t.size() >= 3 && ascii(t) && rng.bernoulli(p.char_drop)) t.erase(rng.below(t.size()), 1);
  }
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::size_t draw_count(const std::vector<double>& weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double x = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (x < weights[i]) return i + 1;
    x -= weights[i];
  }
  return weights.size();
}

}  // namespace

std::string_view to_string(FieldKind k) noexcept {
  switch (k) {
    case FieldKind::Name: return "name";
    case FieldKind::City: return "city";
    case FieldKind::Code: return "code";
  }
  return "name";
}

std::optional<FieldKind> parse_field_kind(std::string_view s) noexcept {
  if (s == "name") return FieldKind::Name;
  if (s == "city") return FieldKind::City;
  if (s == "code") return FieldKind::Code;
  return std::nullopt;
}

Perturbation Perturbation::moderate() {
  Perturbation p;
  p.char_swap = 0.05;
  p.char_drop = 0.05;
  p.token_drop = 0.08;
  p.token_reorder = 0.1;
  p.field_blank = 0.03;
  return p;
}

void SynthSpec::validate() const {
  if (n_entities == 0) throw Error(ErrorCode::InvalidInput, "n_entities must be positive");
  if (sources < 3) throw Error(ErrorCode::InvalidInput, "at least three sources are required");
  if (!records_per_entity.empty() && records_per_entity.size() != sources)
    throw Error(ErrorCode::InvalidInput, "records_per_entity needs one weight per count 1..sources");
  if (std::any_of(records_per_entity.begin(), records_per_entity.end(), [](double w) { return !(w >= 0); }))
    throw Error(ErrorCode::InvalidInput, "records_per_entity weights must be non-negative");
  if (!records_per_entity.empty() &&
      std::accumulate(records_per_entity.begin(), records_per_entity.end(), 0.0) <= 0)
    throw Error(ErrorCode::InvalidInput, "records_per_entity weights must not all be zero");
  if (fields.empty()) throw Error(ErrorCode::InvalidInput, "at least one field is required");
  for (double r : {perturbation.char_swap, perturbation.char_drop, perturbation.token_drop, perturbation.token_reorder,
                   perturbation.field_blank})
    if (!(r >= 0 && r <= 1)) throw Error(ErrorCode::InvalidInput, "perturbation rates must lie in [0, 1]");
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  std::vector<double> weights = spec.records_per_entity;
  if (weights.empty()) {
    // Mostly small groups with a tail up to one record per source.
    weights.assign(spec.sources, 1.0);
    weights[0] = 1.5;
    weights[1] = 3.0;
    weights[2] = 2.5;
  }

  struct Draft {
    std::string entity;
    std::string source;
    std::vector<Attribute> attributes;
  };
  std::vector<Draft> drafts;
  for (std::size_t e = 0; e < spec.n_entities; ++e) {
    Rng rng(stable_hash(spec.seed, {"entity", std::to_string(e)}));
    char eid[32];
    std::snprintf(eid, sizeof eid, "e%05zu", e);
    std::vector<std::string> clean;
    for (auto kind : spec.fields) clean.push_back(make_value(kind, rng));

    std::vector<std::size_t> sources(spec.sources);
    std::iota(sources.begin(), sources.end(), std::size_t{0});
    rng.shuffle(sources);
    const std::size_t count = draw_count(weights, rng);
    for (std::size_t r = 0; r < count; ++r) {
      const std::size_t src = sources[r];
      Draft d;
      d.entity = eid;
      d.source = "s" + std::to_string(src + 1);
      for (std::size_t f = 0; f < spec.fields.size(); ++f) {
        const auto& names = kFieldNames[src % kFieldNames.size()];
        const auto kind = static_cast<std::size_t>(spec.fields[f]);
        std::string key(names[kind]);
        if (f > 0 && spec.fields[f] == spec.fields[f - 1]) key += "_" + std::to_string(f);
        d.attributes.emplace_back(std::move(key), perturb(clean[f], spec.perturbation, rng));
      }
      drafts.push_back(std::move(d));
    }
  }

  std::vector<std::size_t> order(drafts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng id_rng(stable_hash(spec.seed, {"ids"}));
  id_rng.shuffle(order);

  SynthData out;
  out.records.resize(drafts.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    char rid[32];
    std::snprintf(rid, sizeof rid, "r%06zu", i);
    auto& d = drafts[order[i]];
    out.records[i] = Record{rid, d.source, std::move(d.attributes)};
    out.truth.assignment[rid] = d.entity;
  }
  return out;
}

}  // namespace fpclean
