// Canonical event-log encoding.
// One SimEvent per line, keys in the fixed order seq, time, kind, payload.
// Payload objects are emitted with sorted keys and every floating-point
// number is printed with exactly six decimals, which is what makes the
// SHA-256 of a log stable across platforms.
#pragma once

#include <openssl/evp.h>

#include <array>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <string_view>

#include "json.hpp"

namespace abyss {

using Json = nlohmann::json;

struct SimEvent {
    std::uint64_t seq = 0;
    double time = 0.0;
    std::string kind;
    Json payload = Json::object();
};

inline std::string format_fixed6(double v) {
    if (!std::isfinite(v)) return "null";
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%.6f", v);
    std::string s(buf.data());
    if (s == "-0.000000") s = "0.000000";
    return s;
}

namespace detail {

inline void append_canonical(std::string& out, const Json& j) {
    switch (j.type()) {
        case Json::value_t::object: {
            out.push_back('{');
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out.push_back(',');
                first = false;
                out += Json(it.key()).dump();
                out.push_back(':');
                append_canonical(out, it.value());
            }
            out.push_back('}');
            break;
        }
        case Json::value_t::array: {
            out.push_back('[');
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i > 0) out.push_back(',');
                append_canonical(out, j[i]);
            }
            out.push_back(']');
            break;
        }
        case Json::value_t::number_float:
            out += format_fixed6(j.get<double>());
            break;
        default:
            out += j.dump();
            break;
    }
}

}  // namespace detail

/// Canonical text of any JSON value (sorted keys, fixed-precision floats).
inline std::string canonical_dump(const Json& j) {
    std::string out;
    detail::append_canonical(out, j);
    return out;
}

/// Canonical line for one event, without the trailing newline.
inline std::string serialize_event(const SimEvent& e) {
    std::string out = "{\"seq\":" + std::to_string(e.seq) + ",\"time\":" + format_fixed6(e.time) +
                      ",\"kind\":" + Json(e.kind).dump() + ",\"payload\":";
    detail::append_canonical(out, e.payload);
    out.push_back('}');
    return out;
}

/// Parses one log line. Throws nlohmann::json::exception or std::invalid_argument.
inline SimEvent parse_event(std::string_view line) {
    const Json j = Json::parse(line);
    if (!j.is_object() || j.size() != 4 || !j.contains("seq") || !j.contains("time") || !j.contains("kind") ||
        !j.contains("payload")) {
        throw std::invalid_argument("event line must have exactly seq, time, kind, payload");
    }
    if (!j["seq"].is_number_unsigned() || !j["time"].is_number() || !j["kind"].is_string() ||
        !j["payload"].is_object()) {
        throw std::invalid_argument("event field has wrong type");
    }
    SimEvent e;
    e.seq = j["seq"].get<std::uint64_t>();
    e.time = j["time"].get<double>();
    e.kind = j["kind"].get<std::string>();
    e.payload = j["payload"];
    return e;
}

/// Incremental SHA-256 backed by OpenSSL EVP.
class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw std::runtime_error("SHA-256 init failed");
        }
    }

    void update(std::string_view data) {
        if (EVP_DigestUpdate(ctx_.get(), data.data(), data.size()) != 1) {
            throw std::runtime_error("SHA-256 update failed");
        }
    }

    std::string hex_digest() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw std::runtime_error("SHA-256 final failed");
        static constexpr char kHex[] = "0123456789abcdef";
        std::string out;
        out.reserve(2 * len);
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(kHex[md[i] >> 4]);
            out.push_back(kHex[md[i] & 0xf]);
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline std::string sha256_hex(std::string_view data) {
    Sha256 h;
    h.update(data);
    return h.hex_digest();
}

}  // namespace abyss
