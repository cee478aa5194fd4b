#pragma once

#include <openssl/evp.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "leafsynth/inpaint_client.hpp"
#include "leafsynth/png_io.hpp"

namespace leafsynth {

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
    std::string clean;
    clean.reserve(text.size());
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
    if (clean.size() % 4 != 0) throw ProtocolError("base64 payload length is not a multiple of 4");
    std::vector<std::uint8_t> out(3 * clean.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                  static_cast<int>(clean.size()));
    if (n < 0) throw ProtocolError("invalid base64 payload");
    std::size_t pad = 0;
    if (!clean.empty() && clean.back() == '=') ++pad;
    if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

struct HttpEndpoint {
    std::string scheme_host_port; // e.g. http://127.0.0.1:7860
    std::string path = "/";
};

inline HttpEndpoint parse_http_endpoint(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw InputError("endpoint must be mock:<mode> or http(s)://host[:port]/path");
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw InputError("unsupported endpoint scheme '" + std::string(scheme) + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    HttpEndpoint ep;
    ep.scheme_host_port = std::string(url.substr(0, path_start));
    if (path_start != std::string_view::npos) ep.path = std::string(url.substr(path_start));
    if (ep.scheme_host_port.size() <= scheme_end + 3) throw InputError("endpoint has no host");
    return ep;
}

// JSON request body with base64 PNG rasters.
inline nlohmann::json encode_request(const InpaintRequest& req) {
    return {{"image", base64_encode(encode_png(req.image))},
            {"mask", base64_encode(encode_png(req.region_mask))},
            {"edges", base64_encode(encode_png(req.edge_condition))},
            {"prompt", req.prompt},
            {"seed", req.request_seed},
            {"steps", req.steps},
            {"guidance", req.guidance}};
}

inline RasterImage decode_response_image(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("response is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("image") || !j["image"].is_string())
        throw ProtocolError("response lacks a string 'image' field");
    try {
        return decode_rgb(base64_decode(j["image"].get<std::string>()));
    } catch (const IoError& e) {
        throw ProtocolError(std::string("response image is not a PNG: ") + e.what());
    }
}

class HttpBackend : public InpaintBackend {
public:
    explicit HttpBackend(std::string url) : url_(std::move(url)), ep_(parse_http_endpoint(url_)) {}

    InpaintResponse run(const InpaintRequest& req) override {
        const auto t0 = std::chrono::steady_clock::now();
        httplib::Client cli(ep_.scheme_host_port);
        cli.set_connection_timeout(req.timeout);
        cli.set_read_timeout(req.timeout);
        cli.set_write_timeout(req.timeout);
        const std::string body = encode_request(req).dump();
        auto res = cli.Post(ep_.path, body, "application/json");
        if (!res) throw TransportError("POST " + url_ + " failed: " + httplib::to_string(res.error()));
        if (res->status < 200 || res->status >= 300)
            throw ServiceError(res->status, "service replied HTTP " + std::to_string(res->status));
        InpaintResponse resp;
        resp.image = decode_response_image(res->body);
        resp.backend_id = url_;
        resp.latency = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0);
        return resp;
    }

    std::string id() const override { return url_; }

private:
    std::string url_;
    HttpEndpoint ep_;
};

// mock:identity, mock:perturb or an http(s) URL.
inline std::shared_ptr<InpaintBackend> make_backend(std::string_view endpoint) {
    if (endpoint.rfind("mock:", 0) == 0) {
        const auto mode = endpoint.substr(5);
        if (mode == "identity" || mode.empty()) return std::make_shared<MockBackend>(MockBackend::Mode::identity);
        if (mode == "perturb") return std::make_shared<MockBackend>(MockBackend::Mode::perturb);
        throw InputError("unknown mock mode '" + std::string(mode) + "'");
    }
    return std::make_shared<HttpBackend>(std::string(endpoint));
}

} // namespace leafsynth
