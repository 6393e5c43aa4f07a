#include "fc/model_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "fc/errors.hpp"

namespace fc {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double x = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw DomainError("not a number: '" + std::string(s) + "'");
  return x;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

std::string_view trim(std::string_view s, int* offset = nullptr) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  if (offset) *offset += static_cast<int>(a);
  return s.substr(a, b - a);
}

struct Token {
  std::string text;
  int line = 0, col = 0;
};

struct Entry {
  Token key;
  std::vector<std::vector<Token>> groups;  // ';' separates groups, ',' items
  std::vector<Token> flat() const {
    std::vector<Token> out;
    for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
    return out;
  }
  Token scalar() const {
    auto f = flat();
    if (f.size() != 1) throw ParseError("'" + key.text + "' takes a single value", key.line, key.col);
    return f.front();
  }
};

struct Section {
  Token name;
  std::map<std::string, Entry> entries;
  std::set<std::string> used;

  const Entry* find(const std::string& k) {
    auto it = entries.find(k);
    if (it == entries.end()) return nullptr;
    used.insert(k);
    return &it->second;
  }
  const Entry& need(const std::string& k) {
    if (const Entry* e = find(k)) return *e;
    throw ParseError("section [" + name.text + "] is missing key '" + k + "'", name.line, name.col);
  }
  void reject_unknown(const std::set<std::string>& allowed) const {
    for (const auto& [k, e] : entries)
      if (!allowed.count(k))
        throw ParseError("unknown key '" + k + "' in section [" + name.text + "]", e.key.line, e.key.col);
  }
};

std::vector<std::vector<Token>> split_value(std::string_view v, int line, int col) {
  int off = col;
  v = trim(v, &off);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ParseError("unterminated '['", line, off);
    v = v.substr(1, v.size() - 2);
    ++off;
  }
  std::vector<std::vector<Token>> groups(1);
  std::size_t start = 0;
  for (std::size_t k = 0; k <= v.size(); ++k) {
    if (k == v.size() || v[k] == ',' || v[k] == ';') {
      int c = off + static_cast<int>(start);
      auto item = trim(v.substr(start, k - start), &c);
      if (!item.empty()) groups.back().push_back({std::string(item), line, c});
      else if (k < v.size() && v[k] == ',') throw ParseError("empty list item", line, c);
      if (k < v.size() && v[k] == ';') groups.emplace_back();
      start = k + 1;
    }
  }
  return groups;
}

std::vector<Section> lex(std::string_view text) {
  std::vector<Section> out;
  std::set<std::string> seen;
  int line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line;
    if (auto h = raw.find('#'); h != std::string_view::npos) raw = raw.substr(0, h);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    int col = 1;
    std::string_view s = trim(raw, &col);
    if (s.empty()) {
      if (nl == text.size()) break;
      continue;
    }
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError("section header needs a closing ']'", line, col);
      int c = col + 1;
      auto name = trim(s.substr(1, s.size() - 2), &c);
      if (name.empty()) throw ParseError("empty section name", line, col);
      if (!seen.insert(std::string(name)).second)
        throw ParseError("duplicate section [" + std::string(name) + "]", line, col);
      out.push_back({{std::string(name), line, c}, {}, {}});
    } else {
      const auto eq = s.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line, col);
      if (out.empty()) throw ParseError("key outside of any section", line, col);
      int kc = col;
      auto key = trim(s.substr(0, eq), &kc);
      if (key.empty()) throw ParseError("missing key before '='", line, col);
      Entry e{{std::string(key), line, kc}, split_value(s.substr(eq + 1), line, col + static_cast<int>(eq) + 1)};
      if (!out.back().entries.emplace(std::string(key), std::move(e)).second)
        throw ParseError("duplicate key '" + std::string(key) + "'", line, kc);
    }
    if (nl == text.size()) break;
  }
  return out;
}

// number | '-' | free[:name][@start]
struct Cell {
  Token tok;
  bool dash = false;
  bool free = false;
  std::string name;
  std::optional<double> value;
};

Cell parse_cell(const Token& t) {
  Cell c;
  c.tok = t;
  std::string_view s = t.text;
  if (s == "-") {
    c.dash = true;
    return c;
  }
  if (s.substr(0, 4) == "free") {
    c.free = true;
    s.remove_prefix(4);
    std::string_view at;
    if (auto a = s.find('@'); a != std::string_view::npos) {
      at = s.substr(a + 1);
      s = s.substr(0, a);
    }
    if (!s.empty()) {
      if (s.front() != ':' || s.size() == 1) throw ParseError("expected free, free:name or free@start", t.line, t.col);
      c.name = std::string(s.substr(1));
    }
    if (!at.empty()) {
      try {
        c.value = parse_double(at);
      } catch (const DomainError&) {
        throw ParseError("bad start value '" + std::string(at) + "'", t.line, t.col);
      }
    }
    return c;
  }
  try {
    c.value = parse_double(s);
  } catch (const DomainError&) {
    throw ParseError("expected a number, '-' or free, got '" + t.text + "'", t.line, t.col);
  }
  return c;
}

std::size_t parse_count(const Entry& e, std::size_t min) {
  const Token t = e.scalar();
  std::size_t v = 0;
  auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (r.ec != std::errc() || r.ptr != t.text.data() + t.text.size() || v < min)
    throw ParseError("'" + e.key.text + "' must be an integer >= " + std::to_string(min), t.line, t.col);
  return v;
}

template <class F>
auto parse_name(const Token& t, F&& f) {
  try {
    return f(t.text);
  } catch (const DomainError& err) {
    throw ParseError(err.what(), t.line, t.col);
  }
}

struct FreeMark {
  std::string name;
  ParamSlot slot;
};

std::optional<Family> inner_tau_family(InnerFamily fam, std::size_t k, const std::vector<Family>& pairs) {
  switch (fam) {
    case InnerFamily::Clayton: return Family::Clayton;
    case InnerFamily::Gumbel: return Family::Gumbel;
    case InnerFamily::Frank: return Family::Frank;
    case InnerFamily::GaussianExchangeable: return Family::Gaussian;
    case InnerFamily::CVine: return k < pairs.size() ? std::optional(pairs[k]) : std::nullopt;
    default: return std::nullopt;
  }
}

double default_tau(Family f) {
  const Interval r = tau_range(f);
  return std::clamp(0.3, r.lo + 1e-3, r.hi - 1e-3);
}

double from_tau_checked(Family f, double tau, const Token& t, const std::string& where) {
  try {
    return theta_of_tau(f, tau);
  } catch (const DomainError& e) {
    throw DomainError(where + ": " + e.what() + " (line " + std::to_string(t.line) + ")");
  }
}

}  // namespace

ParsedModel parse_model_spec(std::string_view text) {
  auto sections = lex(text);
  std::map<std::string, Section*> by_name;
  for (auto& s : sections) by_name[s.name.text] = &s;
  auto it = by_name.find("model");
  if (it == by_name.end()) throw ParseError("missing [model] section", 1, 1);
  Section& ms = *it->second;
  ms.reject_unknown({"dimension", "layers"});
  const std::size_t d = parse_count(ms.need("dimension"), 1);
  const std::size_t w = parse_count(ms.need("layers"), 1);

  for (auto& s : sections) {
    const auto& n = s.name.text;
    // [fit] carries estimation diagnostics in result files; read as a model it is ignored
    if (n == "model" || n == "inner" || n == "fit") continue;
    bool ok = false;
    if (n.rfind("linking.", 0) == 0) {
      std::size_t j = 0;
      auto r = std::from_chars(n.data() + 8, n.data() + n.size(), j);
      ok = r.ec == std::errc() && r.ptr == n.data() + n.size() && j >= 1 && j <= w;
    }
    if (!ok) throw ParseError("unknown section [" + n + "]", s.name.line, s.name.col);
  }

  std::vector<FreeMark> marks;
  auto mark = [&](const Cell& c, ParamSlot slot) {
    if (c.free) marks.push_back({c.name.empty() ? slot_name(slot) : c.name, slot});
  };

  // Linking grid.
  std::vector<BivariateCopula> grid(d * w);
  for (std::size_t j = 0; j < w; ++j) {
    const std::string sname = "linking." + std::to_string(j + 1);
    auto sit = by_name.find(sname);
    if (sit == by_name.end()) throw ParseError("missing section [" + sname + "]", ms.name.line, ms.name.col);
    Section& s = *sit->second;
    s.reject_unknown({"families", "params", "taus"});
    const auto fams = s.need("families").flat();
    if (fams.size() != d)
      throw ParseError("[" + sname + "] families lists " + std::to_string(fams.size()) + " entries, expected " +
                           std::to_string(d),
                       s.entries.at("families").key.line, s.entries.at("families").key.col);
    const Entry* params = s.find("params");
    const Entry* taus = s.find("taus");
    if (params && taus)
      throw ParseError("[" + sname + "] takes params or taus, not both", taus->key.line, taus->key.col);
    if (!params && !taus)
      throw ParseError("section [" + sname + "] is missing key 'params' (or 'taus')", s.name.line, s.name.col);
    const Entry& ve = params ? *params : *taus;
    const auto vals = ve.flat();
    if (vals.size() != d)
      throw ParseError("[" + sname + "] " + ve.key.text + " lists " + std::to_string(vals.size()) +
                           " entries, expected " + std::to_string(d),
                       ve.key.line, ve.key.col);
    for (std::size_t i = 0; i < d; ++i) {
      const Family f = parse_name(fams[i], [](const std::string& x) { return parse_family(x); });
      const Cell c = parse_cell(vals[i]);
      const std::string where = "[" + sname + "] variable " + std::to_string(i + 1);
      if (!has_parameter(f)) {
        if (c.free) throw ParseError(std::string(family_name(f)) + " has no parameter to free", c.tok.line, c.tok.col);
        grid[i * w + j] = BivariateCopula(f);
        continue;
      }
      if (c.dash) throw ParseError(std::string(family_name(f)) + " needs a value", c.tok.line, c.tok.col);
      double theta;
      if (taus) {
        const double tau = c.value.value_or(default_tau(f));
        theta = from_tau_checked(f, tau, c.tok, where);
      } else {
        theta = c.value ? *c.value : theta_of_tau(f, default_tau(f));
      }
      try {
        grid[i * w + j] = BivariateCopula(f, theta);
      } catch (const DomainError& e) {
        throw DomainError(where + ": " + e.what());
      }
      mark(c, LinkingSlot{i, j});
    }
  }

  // Inner copula.
  InnerFamily ifam = InnerFamily::Independence;
  std::vector<FactorMapping> mappings;
  FactorLaw law;
  std::vector<Family> pairs;
  if (auto iit = by_name.find("inner"); iit != by_name.end()) {
    Section& s = *iit->second;
    s.reject_unknown({"family", "mapping", "mapping_params", "taus", "pair_families", "factor_law", "factor_param"});
    if (const Entry* e = s.find("family"))
      ifam = parse_name(e->scalar(), [](const std::string& x) { return parse_inner_family(x); });
    if (const Entry* e = s.find("pair_families")) {
      if (ifam != InnerFamily::CVine)
        throw ParseError("pair_families only applies to the cvine inner family", e->key.line, e->key.col);
      for (const auto& t : e->flat()) pairs.push_back(parse_name(t, [](const std::string& x) { return parse_family(x); }));
      if (pairs.size() + 1 != d)
        throw ParseError("pair_families needs " + std::to_string(d - 1) + " entries", e->key.line, e->key.col);
    } else if (ifam == InnerFamily::CVine) {
      throw ParseError("section [inner] is missing key 'pair_families'", s.name.line, s.name.col);
    }
    if (const Entry* e = s.find("factor_law")) {
      const Token t = e->scalar();
      if (t.text == "uniform") law.kind = FactorLawKind::Uniform;
      else if (t.text == "exponential") law.kind = FactorLawKind::Exponential;
      else if (t.text == "pareto") law.kind = FactorLawKind::Pareto;
      else throw ParseError("unknown factor law '" + t.text + "'", t.line, t.col);
    }
    if (const Entry* e = s.find("factor_param")) {
      if (law.kind != FactorLawKind::Exponential)
        throw ParseError("factor_param only applies to the exponential factor law", e->key.line, e->key.col);
      const Cell c = parse_cell(e->scalar());
      if (c.dash) throw ParseError("factor_param needs a value", c.tok.line, c.tok.col);
      law.lambda = c.value.value_or(1.0);
      mark(c, FactorLawSlot{});
    }

    std::size_t n_maps = 1;
    if (ifam == InnerFamily::Independence || ifam == InnerFamily::FrechetUpper) n_maps = 0;
    if (ifam == InnerFamily::CVine) n_maps = d - 1;
    std::vector<MappingKind> kinds(n_maps, MappingKind::Constant);
    if (const Entry* e = s.find("mapping")) {
      const auto toks = e->flat();
      if (n_maps == 0) throw ParseError("this inner family takes no mapping", e->key.line, e->key.col);
      if (toks.size() != 1 && toks.size() != n_maps)
        throw ParseError("mapping needs 1 or " + std::to_string(n_maps) + " entries", e->key.line, e->key.col);
      for (std::size_t k = 0; k < n_maps; ++k)
        kinds[k] = parse_name(toks[toks.size() == 1 ? 0 : k], [](const std::string& x) { return parse_mapping(x); });
    }
    const Entry* mp = s.find("mapping_params");
    const Entry* mt = s.find("taus");
    if (mp && mt) throw ParseError("[inner] takes mapping_params or taus, not both", mt->key.line, mt->key.col);
    bool needs_values = false;
    for (auto k : kinds) needs_values |= mapping_param_count(k, 0) != 0 || k == MappingKind::UserTable;
    if (needs_values && !mp && !mt)
      throw ParseError("section [inner] is missing key 'mapping_params' (or 'taus')", s.name.line, s.name.col);
    if (!needs_values && (mp || mt)) {
      const Entry* e = mp ? mp : mt;
      throw ParseError("this inner copula takes no mapping parameters", e->key.line, e->key.col);
    }
    if (mt) {
      const auto toks = mt->flat();
      if (toks.size() != n_maps)
        throw ParseError("taus needs " + std::to_string(n_maps) + " entries", mt->key.line, mt->key.col);
      for (std::size_t k = 0; k < n_maps; ++k) {
        if (kinds[k] != MappingKind::Constant)
          throw ParseError("taus only applies to constant mappings", toks[k].line, toks[k].col);
        const Cell c = parse_cell(toks[k]);
        if (c.dash) throw ParseError("a value is needed here", c.tok.line, c.tok.col);
        const auto tf = inner_tau_family(ifam, k, pairs);
        if (!tf || !has_parameter(*tf)) throw ParseError("no tau scale for this inner copula", c.tok.line, c.tok.col);
        const double tau = c.value.value_or(default_tau(*tf));
        mappings.push_back(FactorMapping::constant(from_tau_checked(*tf, tau, c.tok, "[inner]")));
        mark(c, MappingSlot{k, 0});
      }
    } else if (mp) {
      auto groups = mp->groups;
      if (groups.size() != n_maps) {
        if (!(n_maps > 1 && groups.size() == 1 && groups[0].size() == n_maps))
          throw ParseError("mapping_params needs " + std::to_string(n_maps) + " ';'-separated groups", mp->key.line,
                           mp->key.col);
        // one value per mapping written on a single comma list
        std::vector<std::vector<Token>> split;
        for (auto& t : groups[0]) split.push_back({t});
        groups = std::move(split);
      }
      for (std::size_t k = 0; k < n_maps; ++k) {
        std::vector<double> vals;
        for (std::size_t q = 0; q < groups[k].size(); ++q) {
          const Cell c = parse_cell(groups[k][q]);
          if (c.dash) throw ParseError("a value is needed here", c.tok.line, c.tok.col);
          double v = 0.5;
          if (c.value) {
            v = *c.value;
          } else if (kinds[k] == MappingKind::Constant) {
            if (auto tf = inner_tau_family(ifam, k, pairs); tf && has_parameter(*tf))
              v = theta_of_tau(*tf, default_tau(*tf));
          } else if (kinds[k] == MappingKind::ExpInverse) {
            v = 1.0;
          }
          vals.push_back(v);
          mark(c, MappingSlot{k, q});
        }
        try {
          mappings.emplace_back(kinds[k], std::move(vals));
        } catch (const DomainError& e) {
          throw DomainError(std::string("[inner] mapping ") + std::to_string(k + 1) + ": " + e.what());
        }
      }
    } else {
      for (auto k : kinds) mappings.emplace_back(k, std::vector<double>{});
    }
  }

  std::optional<FactorModel> model;
  try {
    InnerCopula inner(ifam, d, mappings, law, pairs);
    model.emplace(d, w, std::move(grid), std::move(inner));
  } catch (const ParseError&) {
    throw;
  } catch (const DomainError& e) {
    throw DomainError(std::string("[inner] ") + e.what());
  }
  ParsedModel out{std::move(*model), {}};
  for (const auto& m : marks) {
    auto f = std::find_if(out.free.begin(), out.free.end(), [&](const FreeParameter& p) { return p.name == m.name; });
    if (f == out.free.end()) out.free.push_back({m.name, {m.slot}});
    else f->slots.push_back(m.slot);
  }
  return out;
}

ParsedModel load_model_spec(const std::string& path) { return parse_model_spec(read_text_file(path)); }

std::string print_model_spec(const FactorModel& model, const std::vector<FreeParameter>& free) {
  auto cell = [&](const ParamSlot& slot, double v) {
    for (const auto& f : free)
      for (const auto& s : f.slots)
        if (slot_name(s) == slot_name(slot)) {
          std::string out = "free";
          if (f.name != slot_name(slot)) out += ":" + f.name;
          return out + "@" + format_double(v);
        }
    return format_double(v);
  };
  std::ostringstream os;
  const std::size_t d = model.dimension(), w = model.depth();
  os << "[model]\ndimension = " << d << "\nlayers = " << w << "\n\n";
  const InnerCopula& in = model.inner();
  os << "[inner]\nfamily = " << inner_family_name(in.family()) << '\n';
  if (!in.pair_families().empty()) {
    os << "pair_families = ";
    for (std::size_t k = 0; k < in.pair_families().size(); ++k)
      os << (k ? ", " : "") << family_name(in.pair_families()[k]);
    os << '\n';
  }
  const auto& maps = in.mappings();
  if (!maps.empty()) {
    os << "mapping = ";
    for (std::size_t k = 0; k < maps.size(); ++k) os << (k ? ", " : "") << mapping_name(maps[k].kind());
    os << '\n';
    bool any = false;
    for (const auto& m : maps) any |= !m.params().empty();
    if (any) {
      os << "mapping_params = ";
      for (std::size_t k = 0; k < maps.size(); ++k) {
        if (k) os << "; ";
        for (std::size_t q = 0; q < maps[k].params().size(); ++q)
          os << (q ? ", " : "") << cell(MappingSlot{k, q}, maps[k].params()[q]);
      }
      os << '\n';
    }
  }
  switch (in.factor_law().kind) {
    case FactorLawKind::Uniform: break;
    case FactorLawKind::Pareto: os << "factor_law = pareto\n"; break;
    case FactorLawKind::Exponential:
      os << "factor_law = exponential\nfactor_param = " << cell(FactorLawSlot{}, in.factor_law().lambda) << '\n';
      break;
  }
  for (std::size_t j = 0; j < w; ++j) {
    os << "\n[linking." << j + 1 << "]\nfamilies = ";
    for (std::size_t i = 0; i < d; ++i) os << (i ? ", " : "") << family_name(model.linking(i, j).family());
    os << "\nparams = ";
    for (std::size_t i = 0; i < d; ++i) {
      const auto& c = model.linking(i, j);
      os << (i ? ", " : "") << (has_parameter(c.family()) ? cell(LinkingSlot{i, j}, c.theta()) : "-");
    }
    os << '\n';
  }
  return os.str();
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::vector<double> vals;
  std::size_t cols = 0, rows = 0;
  std::string line;
  int ln = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::pair<std::string, int>> fields;
    std::size_t start = 0;
    for (std::size_t k = 0; k <= line.size(); ++k)
      if (k == line.size() || line[k] == ',') {
        int c = static_cast<int>(start) + 1;
        fields.emplace_back(std::string(trim(std::string_view(line).substr(start, k - start), &c)), c);
        start = k + 1;
      }
    if (first) {
      first = false;
      bool numeric = true;
      for (auto& [f, c] : fields) {
        try {
          parse_double(f);
        } catch (const DomainError&) {
          numeric = false;
        }
      }
      if (!numeric) {
        for (auto& [f, c] : fields) {
          std::string h = f;
          if (h.size() >= 2 && h.front() == '"' && h.back() == '"') h = h.substr(1, h.size() - 2);
          t.header.push_back(h);
        }
        cols = fields.size();
        continue;
      }
    }
    if (cols == 0) cols = fields.size();
    if (fields.size() != cols)
      throw ParseError("expected " + std::to_string(cols) + " fields, got " + std::to_string(fields.size()), ln, 1);
    for (auto& [f, c] : fields) {
      try {
        vals.push_back(parse_double(f));
      } catch (const DomainError&) {
        throw ParseError("not a number: '" + f + "'", ln, c);
      }
    }
    ++rows;
  }
  t.values = Matrix(rows, cols);
  t.values.data() = std::move(vals);
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  return read_csv(in);
}

void write_csv(std::ostream& out, const Matrix& values, const std::vector<std::string>& header) {
  std::vector<std::string> h = header;
  if (h.empty())
    for (std::size_t c = 0; c < values.cols(); ++c) h.push_back("u" + std::to_string(c + 1));
  for (std::size_t c = 0; c < h.size(); ++c) out << (c ? "," : "") << h[c];
  out << '\n';
  for (std::size_t r = 0; r < values.rows(); ++r) {
    for (std::size_t c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Matrix& values, const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot write '" + path + "'");
  write_csv(out, values, header);
}

}  // namespace fc
