#pragma once

#include <string>
#include <vector>

#include "sindy/bench.hpp"
#include "sindy/io.hpp"

namespace sindy {

inline constexpr int kSchemaVersion = 1;

/// Reads typed fields from a JSON object, remembering which keys were consumed. Problems are
/// accumulated in a shared list so a whole document can be reported at once.
class JsonReader {
public:
    JsonReader(const Json& obj, std::string prefix, std::vector<std::string>& errors);

    bool has(const std::string& key) const;
    const Json* raw(const std::string& key);

    template <class T>
    void get(const std::string& key, T& out) {
        const Json* v = raw(key);
        if (!v) return;
        try {
            out = v->get<T>();
        } catch (const nlohmann::json::exception&) {
            type_error(key, *v);
        }
    }

    /// Reports every key that no get()/raw() call asked for.
    void finish();
    std::string path(const std::string& key) const;
    std::vector<std::string>& errors() { return errors_; }

private:
    void type_error(const std::string& key, const Json& value);

    const Json& obj_;
    std::string prefix_;
    std::vector<std::string>& errors_;
    std::vector<std::string> used_;
};

/// Throws ConfigError listing every entry of errors (no-op when empty).
void throw_if_errors(const std::string& what, const std::vector<std::string>& errors);

Json to_json(const SimulationSpec& spec);
SimulationSpec simulation_from_json(const Json& j, const std::string& prefix, std::vector<std::string>& errors,
                                    SimulationSpec base);

Json to_json(const RegressorConfig& cfg);
/// Accepts a bare name ("stcv") or an object with "kind" plus overrides.
RegressorConfig regressor_from_json(const Json& j, const std::string& prefix, std::vector<std::string>& errors);

Json to_json(const ExperimentSpec& spec);
void experiment_from_json(JsonReader& in, ExperimentSpec& spec);

Json to_json(const SamplingGridSpec& spec);
void sampling_grid_from_json(JsonReader& in, SamplingGridSpec& spec);

Json to_json(const BiasTestSpec& spec);
void bias_from_json(JsonReader& in, BiasTestSpec& spec);

}  // namespace sindy
