#pragma once

#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <utility>

#include "json.hpp"

#include "railsim/io.hpp"

namespace railsim {
namespace detail {

// tracks which keys were consumed so unknown fields can be reported
class Fields {
  public:
    Fields(nlohmann::json j, std::string where)
        : j_(std::move(j)), where_(std::move(where)) {
        if (!j_.is_object())
            throw ConfigError(where_ + ": expected a JSON object");
    }

    bool has(const char* key) const { return j_.contains(key); }
    const std::string& where() const { return where_; }

    template <typename T>
    T get(const char* key, T def) {
        used_.insert(key);
        if (!j_.contains(key)) return def;
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(where_ + "." + key + ": ill-typed value");
        }
    }

    const nlohmann::json& raw(const char* key) {
        used_.insert(key);
        return j_.at(key);
    }

    void finish(bool strict) const {
        for (const auto& item : j_.items()) {
            if (used_.count(item.key())) continue;
            const std::string msg =
                where_ + "." + item.key() + ": unknown field";
            if (strict) throw ConfigError(msg);
            std::cerr << "warning: " << msg << " (ignored)\n";
        }
    }

  private:
    nlohmann::json j_;
    std::string where_;
    std::set<std::string> used_;
};

inline nlohmann::json load_object(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// json-level config parsers shared by the file loaders and the scenario
// loader (which accepts the same sections inline); defined in io.cpp
TrainParams train_params_from_json(const nlohmann::json& j, bool strict,
                                   const std::string& where);
LidarConfig lidar_config_from_json(const nlohmann::json& j, bool strict,
                                   const std::string& where);
CameraConfig camera_config_from_json(const nlohmann::json& j, bool strict,
                                     const std::string& where);
ImuConfig imu_config_from_json(const nlohmann::json& j, bool strict,
                               const std::string& where);
AmbientConfig ambient_config_from_json(const nlohmann::json& j, bool strict,
                                       const std::string& where);

}  // namespace detail
}  // namespace railsim
