#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace lfboot::cli {

struct RunManifest {
    std::string command;
    nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
    std::uint64_t master_seed = 0;
    bool seed_from_entropy = false;
    std::string library_version;
    std::string started_at;
    std::string finished_at;

    nlohmann::ordered_json to_json() const;
};

/// Current UTC time as ISO 8601 with milliseconds.
std::string utc_timestamp();

/// 64 bits from std::random_device.
std::uint64_t entropy_seed();

}  // namespace lfboot::cli
