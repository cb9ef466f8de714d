#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace segeval::log {

using Sink = std::function<void(const std::string&)>;

namespace detail {
struct State {
    std::mutex mutex;
    Sink sink = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
};
inline State& state() {
    static State s;
    return s;
}
} // namespace detail

/// Replace the warning sink; returns the previous one so callers can restore it.
inline Sink set_sink(Sink sink) {
    auto& s = detail::state();
    std::scoped_lock lock(s.mutex);
    return std::exchange(s.sink, std::move(sink));
}

inline void warn(const std::string& msg) {
    auto& s = detail::state();
    std::scoped_lock lock(s.mutex);
    if (s.sink) s.sink(msg);
}

/// Captures warnings for the lifetime of the object (tests, batch runs).
class ScopedCapture {
public:
    ScopedCapture()
        : previous_(set_sink([this](const std::string& m) { messages_.push_back(m); })) {}
    ~ScopedCapture() { set_sink(std::move(previous_)); }
    ScopedCapture(const ScopedCapture&) = delete;
    ScopedCapture& operator=(const ScopedCapture&) = delete;

    const std::vector<std::string>& messages() const { return messages_; }

private:
    std::vector<std::string> messages_;
    Sink previous_;
};

} // namespace segeval::log
