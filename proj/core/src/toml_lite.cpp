#include "icumort/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "icumort/error.hpp"

namespace icumort {

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    nlohmann::json parse() {
        nlohmann::json root = nlohmann::json::object();
        nlohmann::json* table = &root;
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                ++pos_;
                if (peek() == '[') fail("arrays of tables are not supported");
                skip_ws();
                auto path = parse_key_path();
                skip_ws();
                expect(']');
                table = &descend(root, path);
            } else {
                auto path = parse_key_path();
                skip_ws();
                expect('=');
                skip_ws();
                auto value = parse_value();
                const std::string last = path.back();
                path.pop_back();
                auto& target = descend(*table, path);
                if (target.contains(last)) fail("duplicate key '" + last + "'");
                target[last] = std::move(value);
            }
            end_of_line();
        }
        return root;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;

    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("TOML line " + std::to_string(line_) + ": " + what);
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }

    void skip_comment() {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') ++pos_;
        }
    }

    // Whitespace, comments and newlines (inside arrays and between entries).
    void skip_blank_lines() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\r') ++pos_;
            if (peek() == '\n') {
                ++pos_;
                ++line_;
                continue;
            }
            break;
        }
    }

    void end_of_line() {
        skip_ws();
        skip_comment();
        if (peek() == '\r') ++pos_;
        if (eof()) return;
        if (peek() != '\n') fail("unexpected text after value");
        ++pos_;
        ++line_;
    }

    static bool bare_char(char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    }

    std::string parse_key() {
        if (peek() == '"') return parse_basic_string();
        if (peek() == '\'') return parse_literal_string();
        const std::size_t start = pos_;
        while (!eof() && bare_char(peek())) ++pos_;
        if (start == pos_) fail("expected a key");
        return std::string(s_.substr(start, pos_ - start));
    }

    std::vector<std::string> parse_key_path() {
        std::vector<std::string> path{parse_key()};
        skip_ws();
        while (peek() == '.') {
            ++pos_;
            skip_ws();
            path.push_back(parse_key());
            skip_ws();
        }
        return path;
    }

    nlohmann::json& descend(nlohmann::json& from, const std::vector<std::string>& path) {
        nlohmann::json* node = &from;
        for (const auto& key : path) {
            if (!node->contains(key)) (*node)[key] = nlohmann::json::object();
            node = &(*node)[key];
            if (!node->is_object()) fail("key '" + key + "' is not a table");
        }
        return *node;
    }

    std::string parse_basic_string() {
        expect('"');
        if (s_.substr(pos_, 2) == "\"\"") fail("multi-line strings are not supported");
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = s_[pos_++];
            if (c == '"') break;
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (eof()) fail("unterminated escape");
            c = s_[pos_++];
            switch (c) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            case 'b': out.push_back('\b'); break;
            case 'f': out.push_back('\f'); break;
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            case 'u': {
                if (pos_ + 4 > s_.size()) fail("short \\u escape");
                unsigned cp = 0;
                auto [p, ec] = std::from_chars(s_.data() + pos_, s_.data() + pos_ + 4, cp, 16);
                if (ec != std::errc{} || p != s_.data() + pos_ + 4) fail("bad \\u escape");
                pos_ += 4;
                if (cp < 0x80) {
                    out.push_back(static_cast<char>(cp));
                } else if (cp < 0x800) {
                    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
                    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
                } else {
                    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
                    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
                    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
                }
                break;
            }
            default: fail(std::string("unknown escape \\") + c);
            }
        }
        return out;
    }

    std::string parse_literal_string() {
        expect('\'');
        const std::size_t start = pos_;
        while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
        if (peek() != '\'') fail("unterminated literal string");
        std::string out(s_.substr(start, pos_ - start));
        ++pos_;
        return out;
    }

    nlohmann::json parse_array() {
        expect('[');
        nlohmann::json arr = nlohmann::json::array();
        while (true) {
            skip_blank_lines();
            if (peek() == ']') {
                ++pos_;
                return arr;
            }
            arr.push_back(parse_value());
            skip_blank_lines();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            skip_blank_lines();
            expect(']');
            return arr;
        }
    }

    nlohmann::json parse_inline_table() {
        expect('{');
        nlohmann::json obj = nlohmann::json::object();
        skip_ws();
        if (peek() == '}') {
            ++pos_;
            return obj;
        }
        while (true) {
            skip_ws();
            auto path = parse_key_path();
            skip_ws();
            expect('=');
            skip_ws();
            auto value = parse_value();
            const std::string last = path.back();
            path.pop_back();
            auto& target = descend(obj, path);
            if (target.contains(last)) fail("duplicate key '" + last + "'");
            target[last] = std::move(value);
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect('}');
            return obj;
        }
    }

    nlohmann::json parse_scalar_token() {
        const std::size_t start = pos_;
        while (!eof() && (bare_char(peek()) || peek() == '.' || peek() == '+' || peek() == ':')) ++pos_;
        std::string tok(s_.substr(start, pos_ - start));
        if (tok.empty()) fail("expected a value");
        if (tok == "true") return true;
        if (tok == "false") return false;
        std::string sign;
        std::string body = tok;
        if (body[0] == '+' || body[0] == '-') {
            sign = body.substr(0, 1);
            body = body.substr(1);
        }
        if (body == "inf") return sign == "-" ? -std::numeric_limits<double>::infinity()
                                              : std::numeric_limits<double>::infinity();
        if (body == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (tok.find(':') != std::string::npos) fail("dates and times are not supported");

        std::string clean;
        for (std::size_t i = 0; i < tok.size(); ++i) {
            if (tok[i] != '_') {
                clean.push_back(tok[i]);
                continue;
            }
            const bool ok = i > 0 && i + 1 < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i - 1])) &&
                            std::isdigit(static_cast<unsigned char>(tok[i + 1]));
            if (!ok) fail("misplaced underscore in number '" + tok + "'");
        }
        if (clean[0] == '+') clean.erase(0, 1);
        const bool is_float = clean.find_first_of(".eE") != std::string::npos;
        if (!is_float) {
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(clean.data(), clean.data() + clean.size(), v);
            if (ec != std::errc{} || p != clean.data() + clean.size()) fail("invalid value '" + tok + "'");
            return v;
        }
        double v = 0.0;
        auto [p, ec] = std::from_chars(clean.data(), clean.data() + clean.size(), v);
        if (ec != std::errc{} || p != clean.data() + clean.size()) fail("invalid number '" + tok + "'");
        return v;
    }

    nlohmann::json parse_value() {
        switch (peek()) {
        case '"': return parse_basic_string();
        case '\'': return parse_literal_string();
        case '[': return parse_array();
        case '{': return parse_inline_table();
        default: return parse_scalar_token();
        }
    }
};

} // namespace

nlohmann::json parse_toml(std::string_view text) { return Parser(text).parse(); }

nlohmann::json load_toml(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_toml(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

} // namespace icumort
