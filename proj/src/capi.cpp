#include "intricacy/intricacy.h"

#include "intricacy/collapse.hpp"
#include "intricacy/detector_model.hpp"
#include "intricacy/error.hpp"
#include "intricacy/kinetics.hpp"
#include "intricacy/predecoherence.hpp"
#include "intricacy/scenario.hpp"

#include <cstring>
#include <string>

using namespace intricacy;

struct intricacy_scenario {
    scenario::ScenarioConfig config;
};

namespace {

thread_local std::string last_error;

intricacy_status fail(intricacy_status code, const std::string& what)
{
    last_error = what;
    return code;
}

template <class F>
intricacy_status guarded(F&& body)
{
    try {
        body();
        last_error.clear();
        return INTRICACY_OK;
    } catch (const ConfigError& e) {
        return fail(INTRICACY_CONFIG_ERROR, e.what());
    } catch (const NumericalError& e) {
        return fail(INTRICACY_NUMERICAL_ERROR, e.what());
    } catch (const std::bad_alloc&) {
        return fail(INTRICACY_INTERNAL_ERROR, "out of memory");
    } catch (const std::exception& e) {
        return fail(INTRICACY_INTERNAL_ERROR, e.what());
    } catch (...) {
        return fail(INTRICACY_INTERNAL_ERROR, "unknown error");
    }
}

char* copy_string(const std::string& s)
{
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(bool ok, const char* what)
{
    if (!ok)
        throw ConfigError(what);
}

} // namespace

extern "C" {

const char* intricacy_version(void)
{
    return scenario::version();
}

const char* intricacy_last_error(void)
{
    return last_error.c_str();
}

void intricacy_string_free(char* s)
{
    delete[] s;
}

intricacy_status intricacy_scenario_parse(const char* json_text, intricacy_scenario** out)
{
    return intricacy_scenario_parse_kind(json_text, nullptr, out);
}

intricacy_status intricacy_scenario_parse_kind(const char* json_text, const char* kind, intricacy_scenario** out)
{
    return guarded([&] {
        require(json_text && out, "null argument");
        *out = nullptr;
        scenario::json doc;
        try {
            doc = scenario::json::parse(json_text);
        } catch (const scenario::json::parse_error& e) {
            throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
        }
        if (kind) {
            require(doc.is_object(), "<root>: configuration must be a JSON object");
            if (doc.contains("kind") && doc["kind"] != kind)
                throw ConfigError("kind: configuration declares " + doc["kind"].dump() + " but '" + kind +
                                  "' was requested");
            doc["kind"] = kind;
        }
        auto* s = new intricacy_scenario{scenario::parse_config(doc)};
        *out = s;
    });
}

intricacy_status intricacy_scenario_set_seed(intricacy_scenario* s, uint64_t seed)
{
    return guarded([&] {
        require(s, "null scenario handle");
        s->config.seed = seed;
    });
}

intricacy_status intricacy_scenario_set_output_dir(intricacy_scenario* s, const char* dir)
{
    return guarded([&] {
        require(s && dir, "null argument");
        s->config.output_dir = dir;
    });
}

intricacy_status intricacy_scenario_set_formats(intricacy_scenario* s, int csv, int json)
{
    return guarded([&] {
        require(s, "null scenario handle");
        require(csv || json, "at least one output format is required");
        s->config.write_csv = csv != 0;
        s->config.write_json = json != 0;
    });
}

intricacy_status intricacy_scenario_config(const intricacy_scenario* s, char** json_out)
{
    return guarded([&] {
        require(s && json_out, "null argument");
        *json_out = copy_string(s->config.echo().dump(2));
    });
}

intricacy_status intricacy_scenario_run(intricacy_scenario* s, char** manifest_out)
{
    return guarded([&] {
        require(s && manifest_out, "null argument");
        *manifest_out = nullptr;
        scenario::RunManifest m = scenario::run_scenario(s->config);
        *manifest_out = copy_string(m.to_json().dump(2));
    });
}

void intricacy_scenario_destroy(intricacy_scenario* s)
{
    delete s;
}

const char* const* intricacy_scenario_kinds(void)
{
    static const char* const kinds[] = {"estimate", "wavefront", "field", "sectors", "predecoherence", "collapse",
                                        nullptr};
    return kinds;
}

intricacy_status intricacy_detector_estimates(const char* params_json, char** json_out)
{
    return guarded([&] {
        require(json_out, "null argument");
        scenario::json doc = {{"kind", "estimate"}};
        if (params_json && *params_json) {
            try {
                doc["detector"] = scenario::json::parse(params_json);
            } catch (const scenario::json::parse_error& e) {
                throw ConfigError(std::string("detector parameters are not valid JSON: ") + e.what());
            }
        }
        scenario::ScenarioConfig c = scenario::parse_config(doc);
        c.write_csv = false;
        *json_out = copy_string(scenario::run_scenario(c).summary.dump(2));
    });
}

intricacy_status intricacy_wave_profile(double domain_length, double tolerance, double* z, double* g,
                                        size_t capacity, size_t* count)
{
    return guarded([&] {
        require(count, "null argument");
        kinetics::WaveProfile p = kinetics::solve_traveling_wave(domain_length, tolerance);
        *count = p.z.size();
        if (capacity > 0) {
            require(z && g, "null output arrays");
            for (size_t i = 0; i < std::min(capacity, p.z.size()); ++i) {
                z[i] = p.z[i];
                g[i] = p.g[i];
            }
        }
    });
}

intricacy_status intricacy_predecoherence_sample(size_t n, uint64_t seed, double* k_plus, double* k_minus,
                                                 double* ks)
{
    return guarded([&] {
        require(k_plus && k_minus && ks, "null argument");
        predecoherence::DisorderSpec spec;
        spec.size = n;
        spec.seed = seed;
        spec.validate();
        auto m = predecoherence::sample_fluctuation_matrix(spec);
        auto split = predecoherence::split_positive_negative(m);
        *k_plus = split.k_plus;
        *k_minus = split.k_minus;
        *ks = predecoherence::semicircle_test(split, spec);
    });
}

intricacy_status intricacy_born_experiment(const double* p, const double* sums, size_t channels, size_t trials,
                                           uint64_t seed, double* frequency, size_t* no_collapse)
{
    return guarded([&] {
        require(p && sums && frequency && no_collapse, "null argument");
        std::vector<double> pv(p, p + channels);
        std::vector<double> sv(sums, sums + channels);
        std::vector<bool> mute(channels);
        for (size_t j = 0; j < channels; ++j)
            mute[j] = sv[j] == 0.0;
        auto state = collapse::ChannelState::make(pv, mute);
        auto schedule = collapse::IntricacySchedule::constant(collapse::IntricacySchedule::cells_for_sums(sv));
        collapse::BornOptions o;
        o.trials = trials;
        o.seed = seed;
        auto r = collapse::born_rule_experiment(state, schedule, collapse::FluctuationModel{}, collapse::StepPolicy{}, o);
        for (size_t j = 0; j < channels; ++j)
            frequency[j] = r.frequency[j];
        *no_collapse = r.no_collapse + r.failures;
    });
}

} // extern "C"
