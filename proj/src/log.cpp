#include "newstrust/log.hpp"

#include "newstrust/util.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>
#include <string>

namespace newstrust::log {

namespace {
std::atomic<Level> g_level{Level::warn};
std::mutex g_mu;
constexpr const char* kNames[] = {"DEBUG", "INFO", "WARN", "ERROR"};
}  // namespace

void set_level(Level l) { g_level = l; }
Level level() { return g_level; }

void write(Level l, std::string_view message) {
    if (l < g_level.load() || l == Level::off) return;
    const auto ts = format_timestamp(now_utc());
    std::lock_guard lock(g_mu);
    std::fprintf(stderr, "%s %-5s %.*s\n", ts.c_str(), kNames[static_cast<int>(l)],
                 static_cast<int>(message.size()), message.data());
}

}  // namespace newstrust::log
