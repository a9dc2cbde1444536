#pragma once

#include "threatsmith/domain.hpp"

#include <chrono>
#include <deque>
#include <functional>
#include <mutex>
#include <variant>

namespace threatsmith {

using MonoClock = std::chrono::steady_clock;
using Instant = MonoClock::time_point;
using Duration = std::chrono::nanoseconds;

struct Permit {
    Instant granted_at;
};

/// Rolling-window limiter: a request at `now` is granted iff fewer than
/// max_requests grants fall in (now - window, now]. Equivalently, no half-open
/// interval [t, t + window) ever holds more than max_requests grants.
///
/// Callers supply the time; the limiter never reads a clock itself, so a fake
/// clock drives it deterministically in tests.
class RateLimiter {
public:
    explicit RateLimiter(RateLimitPolicy policy) : policy_(policy) {
        if (policy_.max_requests == 0 || policy_.window <= Duration::zero())
            throw Error("rate limit policy needs max_requests > 0 and a positive window");
    }

    const RateLimitPolicy& policy() const noexcept { return policy_; }

    /// Grants immediately, or returns the exact minimal wait after which a
    /// grant becomes possible. A `now` older than one already seen (racing
    /// callers) is treated as the latest seen instant.
    std::variant<Permit, Duration> try_acquire(Instant now) {
        std::lock_guard lock(mutex_);
        if (!grants_.empty() && now < grants_.back()) now = grants_.back();
        expire(now);
        if (grants_.size() < policy_.max_requests) {
            grants_.push_back(now);
            return Permit{now};
        }
        // The oldest live grant leaves the window exactly at oldest + window.
        return grants_.front() + policy_.window - now;
    }

    /// Blocks through `sleep` until a permit is granted.
    Permit acquire(const std::function<Instant()>& clock,
                   const std::function<void(Duration)>& sleep) {
        for (;;) {
            auto result = try_acquire(clock());
            if (auto* permit = std::get_if<Permit>(&result)) return *permit;
            sleep(std::get<Duration>(result));
        }
    }

    std::size_t in_flight(Instant now) {
        std::lock_guard lock(mutex_);
        expire(now);
        return grants_.size();
    }

private:
    void expire(Instant now) {
        while (!grants_.empty() && grants_.front() + policy_.window <= now) grants_.pop_front();
    }

    RateLimitPolicy policy_;
    std::mutex mutex_;
    std::deque<Instant> grants_;
};

}  // namespace threatsmith
