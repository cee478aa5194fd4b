#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "leafsynth/error.hpp"
#include "leafsynth/image.hpp"
#include "leafsynth/leaf_shape.hpp"
#include "leafsynth/paper_texture.hpp"
#include "leafsynth/rng.hpp"
#include "leafsynth/scene_render.hpp"

namespace leafsynth {

inline constexpr std::string_view kDefaultPromptTemplate = "{species} leaf on millimeter paper";

// Substitutes every "{species}" in the template.
inline std::string prompt_for(Species species, std::string_view templ = kDefaultPromptTemplate) {
    std::string out(templ);
    const std::string key = "{species}";
    const std::string name(to_string(species));
    for (std::size_t pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + name.size()))
        out.replace(pos, key.size(), name);
    if (out.empty()) throw InputError("prompt template produced an empty prompt");
    return out;
}

inline std::string prompt_for(std::string_view species, std::string_view templ = kDefaultPromptTemplate) {
    return prompt_for(parse_species(species), templ);
}

struct InpaintRequest {
    RasterImage image;
    BinaryMask region_mask;
    BinaryMask edge_condition;
    std::string prompt;
    std::uint64_t request_seed = 0;
    std::chrono::milliseconds timeout{30000};
    int steps = 30;
    double guidance = 7.5;

    void validate() const {
        if (image.size() == 0) throw InputError("inpaint request has no image");
        if (!image.same_shape(region_mask) || !image.same_shape(edge_condition))
            throw InputError("inpaint request rasters differ in resolution");
        if (prompt.empty()) throw InputError("inpaint request prompt is empty");
    }
};

struct InpaintResponse {
    RasterImage image;
    std::string backend_id;
    std::chrono::microseconds latency{0};
    int attempts = 1;
};

class InpaintBackend {
public:
    virtual ~InpaintBackend() = default;
    virtual InpaintResponse run(const InpaintRequest& req) = 0;
    virtual std::string id() const = 0;
};

// Offline stand-in. `identity` echoes the request image; `perturb` recolours
// the masked region deterministically from the request seed and leaves every
// other pixel untouched. Tracks peak concurrency for tests.
class MockBackend : public InpaintBackend {
public:
    enum class Mode { identity, perturb };

    explicit MockBackend(Mode mode = Mode::identity, std::chrono::milliseconds delay = std::chrono::milliseconds{0})
        : mode_(mode), delay_(delay) {}

    InpaintResponse run(const InpaintRequest& req) override {
        const auto t0 = std::chrono::steady_clock::now();
        {
            std::lock_guard lock(mu_);
            ++calls_;
            peak_ = std::max(peak_, ++active_);
        }
        struct Leave {
            MockBackend* self;
            ~Leave() {
                std::lock_guard lock(self->mu_);
                --self->active_;
            }
        } leave{this};
        if (delay_.count() > 0) std::this_thread::sleep_for(delay_);

        InpaintResponse resp;
        resp.backend_id = id();
        resp.image = req.image;
        if (mode_ == Mode::perturb) {
            RandomStream rng(NoiseSeed{req.request_seed}, "mock.perturb");
            const Color tint{rng.uniform(0.2, 0.5), rng.uniform(0.45, 0.75), rng.uniform(0.1, 0.3)};
            for (std::size_t i = 0; i < resp.image.size(); ++i)
                if (req.region_mask[i]) resp.image[i] = to_rgb8(lerp(to_color(resp.image[i]), tint, 0.5));
        }
        resp.latency = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0);
        return resp;
    }

    std::string id() const override { return mode_ == Mode::identity ? "mock:identity" : "mock:perturb"; }

    int peak_in_flight() const {
        std::lock_guard lock(mu_);
        return peak_;
    }
    int calls() const {
        std::lock_guard lock(mu_);
        return calls_;
    }

private:
    Mode mode_;
    std::chrono::milliseconds delay_;
    mutable std::mutex mu_;
    int active_ = 0;
    int peak_ = 0;
    int calls_ = 0;
};

// Fails the first `failures` calls, then delegates.
class FaultInjectingBackend : public InpaintBackend {
public:
    enum class Fault { transport, service_unavailable, bad_request, malformed };

    FaultInjectingBackend(std::shared_ptr<InpaintBackend> inner, int failures, Fault fault = Fault::transport)
        : inner_(std::move(inner)), failures_(failures), fault_(fault) {}

    InpaintResponse run(const InpaintRequest& req) override {
        int n;
        {
            std::lock_guard lock(mu_);
            n = attempts_++;
        }
        if (n < failures_) {
            switch (fault_) {
            case Fault::transport: throw TransportError("injected transport failure");
            case Fault::service_unavailable: throw ServiceError(503, "injected 503");
            case Fault::bad_request: throw ServiceError(400, "injected 400");
            case Fault::malformed: throw ProtocolError("injected malformed reply");
            }
        }
        return inner_->run(req);
    }

    std::string id() const override { return "faulty(" + inner_->id() + ")"; }

    int attempts() const {
        std::lock_guard lock(mu_);
        return attempts_;
    }

private:
    std::shared_ptr<InpaintBackend> inner_;
    int failures_;
    Fault fault_;
    mutable std::mutex mu_;
    int attempts_ = 0;
};

struct RetryPolicy {
    int max_retries = 3; // attempts = 1 + max_retries
    std::chrono::milliseconds initial_backoff{200};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{5000};

    std::chrono::milliseconds backoff(int retry) const {
        const double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, retry);
        return std::chrono::milliseconds(
            static_cast<std::int64_t>(std::min(ms, static_cast<double>(max_backoff.count()))));
    }
};

inline bool retryable(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const TransportError&) {
        return true;
    } catch (const ServiceError& s) {
        return s.transient();
    } catch (...) {
        return false;
    }
}

// Thread-safe client: at most `max_in_flight` backend calls run at once;
// transport failures and transient service errors are retried with
// exponential backoff. The slot is released while backing off.
class InpaintClient {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    InpaintClient(std::shared_ptr<InpaintBackend> backend, RetryPolicy policy = {}, int max_in_flight = 4,
                  Sleeper sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
        : backend_(std::move(backend)), policy_(policy), cap_(max_in_flight), sleep_(std::move(sleeper)) {
        if (!backend_) throw InputError("inpaint client needs a backend");
        if (cap_ < 1) throw InputError("in-flight cap must be at least 1");
        if (policy_.max_retries < 0) throw InputError("retry budget must be non-negative");
    }

    InpaintResponse inpaint(const InpaintRequest& req) {
        req.validate();
        for (int attempt = 0;; ++attempt) {
            std::exception_ptr failure;
            try {
                Slot slot(*this);
                InpaintResponse resp = backend_->run(req);
                if (!resp.image.same_shape(req.image))
                    throw ProtocolError("inpainting service returned a different resolution");
                resp.attempts = attempt + 1;
                return resp;
            } catch (...) {
                failure = std::current_exception();
            }
            if (attempt >= policy_.max_retries || !retryable(failure)) std::rethrow_exception(failure);
            sleep_(policy_.backoff(attempt));
        }
    }

    const InpaintBackend& backend() const { return *backend_; }
    int max_in_flight() const { return cap_; }

private:
    struct Slot {
        InpaintClient& c;
        explicit Slot(InpaintClient& client) : c(client) {
            std::unique_lock lock(c.mu_);
            c.cv_.wait(lock, [&] { return c.in_flight_ < c.cap_; });
            ++c.in_flight_;
        }
        ~Slot() {
            {
                std::lock_guard lock(c.mu_);
                --c.in_flight_;
            }
            c.cv_.notify_one();
        }
    };

    std::shared_ptr<InpaintBackend> backend_;
    RetryPolicy policy_;
    int cap_;
    Sleeper sleep_;
    std::mutex mu_;
    std::condition_variable cv_;
    int in_flight_ = 0;
};

// Keeps the inpainted leaf and restores the procedural background:
// inside the 1-px eroded mask the inpainted pixel, outside the 1-px dilated
// mask the background pixel, and on the seam between them the rounded mean.
inline RasterImage replace_background(const RasterImage& inpainted, const BinaryMask& mask,
                                      const RasterImage& background) {
    if (!inpainted.same_shape(mask) || !inpainted.same_shape(background))
        throw InputError("replace_background rasters differ in resolution");
    const BinaryMask core = erode(mask);
    const BinaryMask reach = dilate(mask);
    RasterImage out(inpainted.width(), inpainted.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (core[i]) {
            out[i] = inpainted[i];
        } else if (!reach[i]) {
            out[i] = background[i];
        } else {
            const Rgb8 a = inpainted[i], b = background[i];
            out[i] = {static_cast<std::uint8_t>((a.r + b.r + 1) / 2), static_cast<std::uint8_t>((a.g + b.g + 1) / 2),
                      static_cast<std::uint8_t>((a.b + b.b + 1) / 2)};
        }
    }
    return out;
}

// Variant that re-renders the leaf-free background (paper and distractors).
inline RasterImage replace_background(const RasterImage& inpainted, const BinaryMask& mask, const PaperSheet& paper,
                                      const SceneParams& scene) {
    if (inpainted.width() != scene.width || inpainted.height() != scene.height)
        throw InputError("scene resolution differs from the inpainted image");
    return replace_background(inpainted, mask, to_raster(compose_background(paper, scene, ShadowParams{}, nullptr, nullptr)));
}

// Pixels that replace_background may blend: the 1-px dilated mask minus the
// 1-px eroded mask.
inline BinaryMask feather_band(const BinaryMask& mask) {
    const BinaryMask core = erode(mask), reach = dilate(mask);
    BinaryMask band(mask.width(), mask.height(), 0);
    for (std::size_t i = 0; i < band.size(); ++i) band[i] = reach[i] && !core[i];
    return band;
}

} // namespace leafsynth
