#include "omlet/rulebase.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "omlet/errors.hpp"

namespace omlet {

std::string format_double(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

namespace {

struct Token {
  std::string text;
  int line;
};

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')
    return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

double parse_number(std::string_view s, int line) {
  double v = 0.0;
  const auto end = s.data() + s.size();
  const auto result = std::from_chars(s.data(), end, v);
  if (result.ec != std::errc() || result.ptr != end)
    throw ParseError(line, "expected a number, got '" + std::string(s) + "'");
  return v;
}

// Whitespace-separated tokens with '#' comments; double-quoted tokens may
// contain spaces.
std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  int line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '"') {
      const std::size_t close = text.find('"', i + 1);
      if (close == std::string_view::npos)
        throw ParseError(line, "unterminated string");
      tokens.push_back({std::string(text.substr(i + 1, close - i - 1)), line});
      i = close + 1;
    } else {
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
             text[j] != '#')
        ++j;
      tokens.push_back({std::string(text.substr(i, j - i)), line});
      i = j;
    }
  }
  return tokens;
}

// Split per physical line, for the line-oriented example and model formats.
std::vector<std::pair<int, std::string>> split_lines(std::string_view text) {
  std::vector<std::pair<int, std::string>> lines;
  int number = 1;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
      line.pop_back();
    std::size_t lead = 0;
    while (lead < line.size() && std::isspace(static_cast<unsigned char>(line[lead])))
      ++lead;
    lines.emplace_back(number, line.substr(lead));
    if (end == text.size()) break;
    start = end + 1;
    ++number;
  }
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string field;
  while (in >> field) fields.push_back(field);
  return fields;
}

}  // namespace

DefinitionTree parse_rules(std::string_view text) {
  const auto tokens = tokenize(text);
  DefinitionTree defs;
  std::set<std::string> range_ids;

  enum class State { Top, Category, Group };
  State state = State::Top;
  CategoryDef current;
  FunctionalGroup group;

  std::size_t i = 0;
  const auto next = [&](const char* what) -> const Token& {
    if (i >= tokens.size())
      throw ParseError(tokens.empty() ? 1 : tokens.back().line,
                       std::string("unexpected end of input, expected ") + what);
    return tokens[i++];
  };
  const auto identifier = [&](const char* what) {
    const Token& tok = next(what);
    if (!is_identifier(tok.text))
      throw ParseError(tok.line, std::string("invalid ") + what + " '" +
                                     tok.text + "'");
    return tok;
  };

  while (i < tokens.size()) {
    const Token tok = tokens[i++];
    switch (state) {
      case State::Top: {
        if (tok.text != "category")
          throw ParseError(tok.line, "expected 'category', got '" + tok.text + "'");
        current = CategoryDef{};
        current.name = identifier("category name").text;
        if (defs.find(current.name))
          throw ParseError(tok.line, "duplicate category '" + current.name + "'");
        if (i < tokens.size() && tokens[i].text == "extends") {
          ++i;
          const Token parent = identifier("parent category name");
          if (!defs.find(parent.text))
            throw ParseError(parent.line, "unknown parent category '" +
                                              parent.text +
                                              "' (must be defined first)");
          current.parent = parent.text;
        }
        state = State::Category;
        break;
      }
      case State::Category: {
        if (tok.text == "binary") {
          const Token id = identifier("binary property id");
          if (std::find(current.binary_props.begin(), current.binary_props.end(),
                        id.text) != current.binary_props.end())
            throw ParseError(id.line, "duplicate binary property '" + id.text + "'");
          current.binary_props.push_back(id.text);
        } else if (tok.text == "group") {
          group = FunctionalGroup{};
          group.name = identifier("group name").text;
          for (const auto& g : current.groups)
            if (g.name == group.name)
              throw ParseError(tok.line, "duplicate group '" + group.name + "'");
          const Token brace = next("'{'");
          if (brace.text != "{")
            throw ParseError(brace.line, "expected '{' after group name");
          state = State::Group;
        } else if (tok.text == "end") {
          defs.categories.push_back(std::move(current));
          state = State::Top;
        } else {
          throw ParseError(tok.line,
                           "expected 'binary', 'group' or 'end', got '" +
                               tok.text + "'");
        }
        break;
      }
      case State::Group: {
        if (tok.text == "range") {
          RangeDecl range;
          range.id = identifier("range id").text;
          if (!range_ids.insert(range.id).second)
            throw ParseError(tok.line, "range '" + range.id +
                                           "' already declared elsewhere");
          if (i < tokens.size() && tokens[i].text == "unit") {
            ++i;
            range.unit = next("unit string").text;
          }
          group.ranges.push_back(std::move(range));
        } else if (tok.text == "}") {
          current.groups.push_back(std::move(group));
          state = State::Category;
        } else {
          throw ParseError(tok.line,
                           "expected 'range' or '}', got '" + tok.text + "'");
        }
        break;
      }
    }
  }
  if (state != State::Top)
    throw ParseError(tokens.empty() ? 1 : tokens.back().line,
                     "unexpected end of input inside a definition block");

  assign_levels(defs);  // surfaces cycles (defensive; grammar forbids them)
  return defs;
}

std::string serialize_rules(const DefinitionTree& defs) {
  std::string out;
  for (const auto& cat : defs.categories) {
    out += "category " + cat.name;
    if (cat.parent) out += " extends " + *cat.parent;
    out += "\n";
    for (const auto& b : cat.binary_props) out += "  binary " + b + "\n";
    for (const auto& g : cat.groups) {
      out += "  group " + g.name + " {\n";
      for (const auto& r : g.ranges) {
        out += "    range " + r.id;
        if (!r.unit.empty()) {
          const bool quote = r.unit.find(' ') != std::string::npos;
          out += quote ? " unit \"" + r.unit + "\"" : " unit " + r.unit;
        }
        out += "\n";
      }
      out += "  }\n";
    }
    out += "end\n\n";
  }
  return out;
}

namespace {

std::pair<std::string, std::string> split_key_value(const std::string& field,
                                                    int line) {
  const auto eq = field.find('=');
  if (eq == std::string::npos)
    throw ParseError(line, "expected key=value, got '" + field + "'");
  return {field.substr(0, eq), field.substr(eq + 1)};
}

void validate_example(const ExampleRecord& ex, const DefinitionTree& defs,
                      int line) {
  if (!defs.find(ex.category))
    throw ParseError(line, "unknown category '" + ex.category + "'");
  if (!(ex.desired > 0.0) || ex.desired > 1.0)
    throw DesiredOutOfRange(ex.desired);
  std::set<std::string> known;
  for (const auto& rid : defs.ranges_in_chain(ex.category)) {
    known.insert(rid);
    if (!ex.measurements.count(rid)) throw MissingMeasurement(rid);
  }
  for (const auto& [rid, _] : ex.measurements)
    if (!known.count(rid))
      throw ParseError(line, "measurement '" + rid +
                                 "' is not a range of category '" +
                                 ex.category + "'");
  known.clear();
  for (const auto& pid : defs.binaries_in_chain(ex.category)) {
    known.insert(pid);
    if (!ex.binaries.count(pid)) throw MissingMeasurement(pid);
  }
  for (const auto& [pid, _] : ex.binaries)
    if (!known.count(pid))
      throw ParseError(line, "binary '" + pid +
                                 "' is not a property of category '" +
                                 ex.category + "'");
}

}  // namespace

std::vector<ExampleRecord> parse_examples(std::string_view text,
                                          const DefinitionTree& defs) {
  std::vector<ExampleRecord> out;
  std::set<std::string> ids;
  ExampleRecord current;
  bool open = false;
  int open_line = 0;

  const auto finish = [&] {
    if (!open) return;
    validate_example(current, defs, open_line);
    out.push_back(std::move(current));
    current = ExampleRecord{};
    open = false;
  };

  for (const auto& [line, content] : split_lines(text)) {
    if (content.empty()) {
      finish();
      continue;
    }
    const auto fields = split_fields(content);
    if (fields[0] == "example") {
      finish();
      if (fields.size() != 4)
        throw ParseError(line,
                         "expected: example <id> category=<name> desired=<real>");
      open = true;
      open_line = line;
      current.id = fields[1];
      if (!is_identifier(current.id))
        throw ParseError(line, "invalid example id '" + current.id + "'");
      if (!ids.insert(current.id).second)
        throw ParseError(line, "duplicate example id '" + current.id + "'");
      for (std::size_t f = 2; f < fields.size(); ++f) {
        const auto [key, value] = split_key_value(fields[f], line);
        if (key == "category")
          current.category = value;
        else if (key == "desired")
          current.desired = parse_number(value, line);
        else
          throw ParseError(line, "unknown example attribute '" + key + "'");
      }
    } else if (fields[0] == "m" || fields[0] == "b") {
      if (!open)
        throw ParseError(line, "'" + fields[0] + "' line outside an example");
      if (fields.size() != 2)
        throw ParseError(line, "expected: " + fields[0] + " <id>=<value>");
      const auto [key, value] = split_key_value(fields[1], line);
      if (fields[0] == "m") {
        if (!current.measurements.emplace(key, parse_number(value, line)).second)
          throw ParseError(line, "duplicate measurement '" + key + "'");
      } else {
        if (value != "0" && value != "1")
          throw ParseError(line, "binary value must be 0 or 1");
        if (!current.binaries.emplace(key, value == "1").second)
          throw ParseError(line, "duplicate binary '" + key + "'");
      }
    } else {
      throw ParseError(line, "expected 'example', 'm' or 'b', got '" +
                                 fields[0] + "'");
    }
  }
  finish();
  return out;
}

std::string serialize_examples(std::span<const ExampleRecord> examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += "example " + ex.id + " category=" + ex.category +
           " desired=" + format_double(ex.desired) + "\n";
    for (const auto& [rid, x] : ex.measurements)
      out += "m " + rid + "=" + format_double(x) + "\n";
    for (const auto& [pid, v] : ex.binaries)
      out += "b " + pid + "=" + (v ? std::string("1") : std::string("0")) + "\n";
    out += "\n";
  }
  return out;
}

namespace {

std::string format_limit(const std::optional<double>& v) {
  return v ? format_double(*v) : "-";
}

std::optional<double> parse_limit(const std::string& field, int line) {
  if (field == "-") return std::nullopt;
  return parse_number(field, line);
}

}  // namespace

std::string serialize_model(const Model& model) {
  std::string out = "# OMLET model\n";
  for (const auto& [key, value] : model.provenance)
    out += key + "=" + value + "\n";
  std::string untrained;
  for (const auto& e : model.entries) {
    if (!e.trained) {
      if (!untrained.empty()) untrained += ",";
      untrained += e.id;
      continue;
    }
    if (e.trapezoid.frozen) out += "range." + e.id + ".frozen=1\n";
    if (e.limits != Limits{})
      out += "range." + e.id + ".limits=" + format_limit(e.limits.z1_max) +
             " " + format_limit(e.limits.n1_max) + " " +
             format_limit(e.limits.n2_min) + " " +
             format_limit(e.limits.z2_min) + "\n";
  }
  if (!untrained.empty()) out += "untrained=" + untrained + "\n";
  out += "\n";
  for (const auto& e : model.entries) {
    if (!e.trained) continue;
    out += e.id + " (" + format_double(e.trapezoid.z1) + " " +
           format_double(e.trapezoid.n1) + " " + format_double(e.trapezoid.n2) +
           " " + format_double(e.trapezoid.z2) + ")\n";
  }
  return out;
}

Model parse_model(std::string_view text) {
  Model model;
  std::vector<std::string> untrained;
  struct Meta {
    bool frozen = false;
    Limits limits;
  };
  std::map<std::string, Meta> metadata;

  for (const auto& [line, content] : split_lines(text)) {
    if (content.empty()) continue;
    if (content.find('(') != std::string::npos) {
      // Range line: <ID> (<z1> <n1> <n2> <z2>)
      std::string cleaned = content;
      std::replace(cleaned.begin(), cleaned.end(), '(', ' ');
      std::replace(cleaned.begin(), cleaned.end(), ')', ' ');
      const auto fields = split_fields(cleaned);
      if (fields.size() != 5)
        throw ParseError(line, "expected: <RANGE_ID> (<z1> <n1> <n2> <z2>)");
      Model::Entry entry;
      entry.id = fields[0];
      if (!is_identifier(entry.id))
        throw ParseError(line, "invalid range id '" + entry.id + "'");
      if (model.find(entry.id))
        throw ParseError(line, "duplicate range '" + entry.id + "'");
      entry.trapezoid.z1 = parse_number(fields[1], line);
      entry.trapezoid.n1 = parse_number(fields[2], line);
      entry.trapezoid.n2 = parse_number(fields[3], line);
      entry.trapezoid.z2 = parse_number(fields[4], line);
      entry.trapezoid.left_open = entry.trapezoid.z1 == -kOpenSentinel &&
                                  entry.trapezoid.n1 == -kOpenSentinel;
      entry.trapezoid.right_open = entry.trapezoid.n2 == kOpenSentinel &&
                                   entry.trapezoid.z2 == kOpenSentinel;
      entry.trained = true;
      model.entries.push_back(std::move(entry));
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw ParseError(line, "expected key=value or a range line");
    const std::string key = content.substr(0, eq);
    const std::string value = content.substr(eq + 1);
    if (key == "untrained") {
      std::istringstream in(value);
      std::string id;
      while (std::getline(in, id, ',')) untrained.push_back(id);
    } else if (key.rfind("range.", 0) == 0) {
      const auto dot = key.rfind('.');
      const std::string id = key.substr(6, dot - 6);
      const std::string attr = key.substr(dot + 1);
      if (attr == "frozen") {
        metadata[id].frozen = value == "1";
      } else if (attr == "limits") {
        const auto fields = split_fields(value);
        if (fields.size() != 4)
          throw ParseError(line, "limits need 4 fields (use '-' for unset)");
        metadata[id].limits.z1_max = parse_limit(fields[0], line);
        metadata[id].limits.n1_max = parse_limit(fields[1], line);
        metadata[id].limits.n2_min = parse_limit(fields[2], line);
        metadata[id].limits.z2_min = parse_limit(fields[3], line);
      } else {
        throw ParseError(line, "unknown range attribute '" + attr + "'");
      }
    } else {
      model.provenance.emplace_back(key, value);
    }
  }

  for (const auto& [id, meta] : metadata) {
    Model::Entry* entry = model.find(id);
    if (!entry)
      throw ParseError(1, "metadata for undeclared range '" + id + "'");
    entry->trapezoid.frozen = meta.frozen;
    entry->limits = meta.limits;
  }
  for (const auto& id : untrained)
    model.entries.push_back({id, Trapezoid{}, Limits{}, false});
  return model;
}

}  // namespace omlet
