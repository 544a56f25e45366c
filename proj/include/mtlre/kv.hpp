#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mtlre {

// Minimal "key = value" file: one pair per line, '#' starts a comment,
// blank lines ignored, insertion order preserved.  Values keep internal
// whitespace; keys and values are trimmed at the edges.
class KeyValueFile {
public:
    static KeyValueFile parse_file(const std::string& path);
    static KeyValueFile parse_string(const std::string& text, const std::string& origin);

    bool has(const std::string& key) const;
    std::optional<std::string> get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;

    // Typed accessors; a present-but-malformed value raises ValidationError
    // naming the key.
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // Keys beginning with `prefix`, in file order.
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
    const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

    // Marks a key as consumed; unconsumed_keys() lets config validation
    // report typos instead of silently ignoring them.
    void mark_used(const std::string& key) const;
    std::vector<std::string> unused_keys() const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    mutable std::vector<bool> used_;
    std::string origin_;
};

// Splits "a,b,c" into trimmed pieces, dropping empties.
std::vector<std::string> split_csv(const std::string& text);

}  // namespace mtlre
