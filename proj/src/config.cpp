#include "sdi/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sdi/errors.hpp"

namespace sdi {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"space", {"dE", "dH"}},
        {"operator", {"A"}},
        {"coefficients", {"F", "G", "L", "p", "eta"}},
        {"scheme",
         {"T", "dt", "n", "n_ladder", "paths", "seed", "selector", "store_selections",
          "norm_cap", "xi"}},
        {"diagnostics",
         {"deltas", "aldous_eta", "bl_anchors", "osgood_k", "osgood_R0", "osgood_grid",
          "osgood_iters", "samples", "box", "conv_t_ladder", "conv_paths", "conv_dt",
          "radius_grid", "max_anchors"}},
        {"output", {"dir"}},
    };
    return keys;
}

struct Lexer {
    const std::string& text;
    std::size_t pos = 0;
    int line = 1;

    explicit Lexer(const std::string& t) : text(t) {}

    [[nodiscard]] char peek() const { return pos < text.size() ? text[pos] : '\0'; }

    char next() {
        const char c = peek();
        ++pos;
        if (c == '\n') ++line;
        return c;
    }

    void skip_inline_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }

    // Whitespace including newlines; used inside bracketed expressions.
    void skip_ws_and_comments() {
        for (;;) {
            skip_inline_ws();
            if (peek() == '#') {
                while (pos < text.size() && text[pos] != '\n') ++pos;
                continue;
            }
            if (peek() == '\n' || peek() == '\r') {
                next();
                continue;
            }
            return;
        }
    }
};

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

ConfigValue parse_value(Lexer& lx);

ConfigValue parse_number(Lexer& lx) {
    const std::size_t start = lx.pos;
    if (lx.peek() == '+' || lx.peek() == '-') lx.next();
    while (std::isdigit(static_cast<unsigned char>(lx.peek())) || lx.peek() == '.' ||
           lx.peek() == 'e' || lx.peek() == 'E' ||
           ((lx.peek() == '+' || lx.peek() == '-') && lx.pos > start &&
            (lx.text[lx.pos - 1] == 'e' || lx.text[lx.pos - 1] == 'E')))
        lx.next();
    const std::string tok = lx.text.substr(start, lx.pos - start);
    try {
        ConfigValue v;
        v.kind = ConfigValue::Kind::number;
        v.number = std::stod(tok);
        v.line = lx.line;
        return v;
    } catch (...) {
        throw ConfigError("invalid number '" + tok + "'", lx.line);
    }
}

ConfigValue parse_value(Lexer& lx) {
    lx.skip_ws_and_comments();
    const char c = lx.peek();
    if (c == '\0') throw ConfigError("unexpected end of input", lx.line);

    if (c == '[') {
        ConfigValue v;
        v.kind = ConfigValue::Kind::list;
        v.line = lx.line;
        lx.next();
        lx.skip_ws_and_comments();
        if (lx.peek() == ']') {
            lx.next();
            return v;
        }
        for (;;) {
            v.items.push_back(parse_value(lx));
            lx.skip_ws_and_comments();
            const char d = lx.next();
            if (d == ']') return v;
            if (d != ',') throw ConfigError("expected ',' or ']' in list", lx.line);
        }
    }

    if (c == '"') {
        lx.next();
        ConfigValue v;
        v.kind = ConfigValue::Kind::string;
        v.line = lx.line;
        while (lx.peek() != '"') {
            if (lx.peek() == '\0' || lx.peek() == '\n')
                throw ConfigError("unterminated string", lx.line);
            v.text.push_back(lx.next());
        }
        lx.next();
        return v;
    }

    if (c == '+' || c == '-' || std::isdigit(static_cast<unsigned char>(c)))
        return parse_number(lx);

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const int line = lx.line;
        std::string ident;
        while (ident_char(lx.peek())) ident.push_back(lx.next());
        lx.skip_inline_ws();
        if (lx.peek() != '(') {
            ConfigValue v;
            v.line = line;
            if (ident == "true" || ident == "false") {
                v.kind = ConfigValue::Kind::boolean;
                v.boolean = ident == "true";
            } else {
                v.kind = ConfigValue::Kind::string;
                v.text = ident;
            }
            return v;
        }
        lx.next();  // '('
        ConfigValue v;
        v.kind = ConfigValue::Kind::call;
        v.text = ident;
        v.line = line;
        lx.skip_ws_and_comments();
        if (lx.peek() == ')') {
            lx.next();
            return v;
        }
        for (;;) {
            lx.skip_ws_and_comments();
            // Named argument?
            std::size_t save_pos = lx.pos;
            int save_line = lx.line;
            std::string name;
            if (std::isalpha(static_cast<unsigned char>(lx.peek())) || lx.peek() == '_') {
                while (ident_char(lx.peek())) name.push_back(lx.next());
                lx.skip_inline_ws();
                if (lx.peek() == '=') {
                    lx.next();
                    v.kwargs.emplace_back(name, parse_value(lx));
                } else {
                    lx.pos = save_pos;
                    lx.line = save_line;
                    v.items.push_back(parse_value(lx));
                }
            } else {
                v.items.push_back(parse_value(lx));
            }
            lx.skip_ws_and_comments();
            const char d = lx.next();
            if (d == ')') return v;
            if (d != ',') throw ConfigError("expected ',' or ')' in call", lx.line);
        }
    }

    throw ConfigError(std::string("unexpected character '") + c + "'", lx.line);
}

}  // namespace

bool ConfigValue::operator==(const ConfigValue& other) const {
    if (kind != other.kind) return false;
    switch (kind) {
        case Kind::number: return number == other.number;
        case Kind::boolean: return boolean == other.boolean;
        case Kind::string: return text == other.text;
        case Kind::list: return items == other.items;
        case Kind::call:
            return text == other.text && items == other.items && kwargs == other.kwargs;
    }
    return false;
}

std::string ConfigValue::print() const {
    switch (kind) {
        case Kind::number: return fmt_double(number);
        case Kind::boolean: return boolean ? "true" : "false";
        case Kind::string: {
            const bool bare = !text.empty() &&
                              (std::isalpha(static_cast<unsigned char>(text[0])) ||
                               text[0] == '_') &&
                              std::all_of(text.begin(), text.end(), ident_char) &&
                              text != "true" && text != "false";
            return bare ? text : "\"" + text + "\"";
        }
        case Kind::list: {
            std::string out = "[";
            for (std::size_t i = 0; i < items.size(); ++i) {
                if (i) out += ", ";
                out += items[i].print();
            }
            return out + "]";
        }
        case Kind::call: {
            std::string out = text + "(";
            bool first = true;
            for (const auto& item : items) {
                if (!first) out += ", ";
                first = false;
                out += item.print();
            }
            for (const auto& [name, value] : kwargs) {
                if (!first) out += ", ";
                first = false;
                out += name + "=" + value.print();
            }
            return out + ")";
        }
    }
    return {};
}

const ConfigValue* ScenarioConfig::find(const std::string& section,
                                        const std::string& key) const {
    for (const auto& [name, entries] : sections) {
        if (name != section) continue;
        for (const auto& [k, v] : entries)
            if (k == key) return &v;
    }
    return nullptr;
}

std::string ScenarioConfig::print() const {
    std::string out;
    for (const auto& [name, entries] : sections) {
        out += "[" + name + "]\n";
        for (const auto& [k, v] : entries) out += k + " = " + v.print() + "\n";
        out += "\n";
    }
    return out;
}

bool ScenarioConfig::operator==(const ScenarioConfig& other) const {
    return sections == other.sections;
}

ScenarioConfig parse_config_text(const std::string& text) {
    ScenarioConfig cfg;
    Lexer lx(text);
    std::vector<std::pair<std::string, ConfigValue>>* current = nullptr;
    std::string current_name;

    for (;;) {
        lx.skip_ws_and_comments();
        if (lx.peek() == '\0') break;

        if (lx.peek() == '[') {
            lx.next();
            std::string name;
            while (lx.peek() != ']' && lx.peek() != '\0' && lx.peek() != '\n')
                name.push_back(lx.next());
            if (lx.peek() != ']') throw ConfigError("unterminated section header", lx.line);
            lx.next();
            if (!known_keys().contains(name))
                throw ConfigError("unknown section [" + name + "]", lx.line);
            for (const auto& [existing, _] : cfg.sections)
                if (existing == name)
                    throw ConfigError("duplicate section [" + name + "]", lx.line);
            cfg.sections.emplace_back(name, std::vector<std::pair<std::string, ConfigValue>>{});
            current = &cfg.sections.back().second;
            current_name = name;
            continue;
        }

        if (!(std::isalpha(static_cast<unsigned char>(lx.peek())) || lx.peek() == '_'))
            throw ConfigError(std::string("unexpected character '") + lx.peek() + "'", lx.line);
        if (current == nullptr)
            throw ConfigError("key outside of any [section]", lx.line);

        const int key_line = lx.line;
        std::string key;
        while (ident_char(lx.peek())) key.push_back(lx.next());
        lx.skip_inline_ws();
        if (lx.next() != '=') throw ConfigError("expected '=' after key '" + key + "'", key_line);

        if (!known_keys().at(current_name).contains(key))
            throw ConfigError("unknown key '" + key + "' in [" + current_name + "]", key_line);
        for (const auto& [existing, _] : *current)
            if (existing == key)
                throw ConfigError("duplicate key '" + key + "' in [" + current_name + "]",
                                  key_line);

        ConfigValue value = parse_value(lx);
        lx.skip_inline_ws();
        if (lx.peek() == '#')
            while (lx.peek() != '\n' && lx.peek() != '\0') lx.next();
        if (lx.peek() != '\n' && lx.peek() != '\0' && lx.peek() != '\r')
            throw ConfigError("trailing characters after value for key '" + key + "'", key_line);
        current->emplace_back(key, std::move(value));
    }
    return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
    const std::string s = cfg.print();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace sdi
