// Command-line front end: one subcommand per scenario kind, built on the C API.

#include "intricacy/intricacy.h"

#include "CLI11.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> formats;
    bool quiet = false;
};

std::string escape(const std::string& s)
{
    std::string r;
    for (char c : s) {
        switch (c) {
        case '"': r += "\\\""; break;
        case '\\': r += "\\\\"; break;
        case '\n': r += "\\n"; break;
        case '\t': r += "\\t"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                r += buf;
            } else {
                r += c;
            }
        }
    }
    return r;
}

int report(int code, const std::string& kind, const std::string& message)
{
    const char* status = code == 1 ? "config_error" : code == 2 ? "numerical_error" : "internal_error";
    std::cerr << "{\"status\": \"" << status << "\", \"exit_code\": " << code << ", \"scenario\": \"" << escape(kind)
              << "\", \"message\": \"" << escape(message) << "\"}\n";
    return code;
}

int exit_code(intricacy_status s)
{
    switch (s) {
    case INTRICACY_OK: return 0;
    case INTRICACY_CONFIG_ERROR: return 1;
    case INTRICACY_NUMERICAL_ERROR: return 2;
    default: return 3;
    }
}

int run(const std::string& kind, const Options& o)
{
    std::string text = "{}";
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in)
            return report(1, kind, "cannot read configuration file '" + o.config + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }

    intricacy_scenario* s = nullptr;
    intricacy_status st = intricacy_scenario_parse_kind(text.c_str(), kind.c_str(), &s);
    if (st != INTRICACY_OK)
        return report(exit_code(st), kind, intricacy_last_error());

    auto finish = [&](intricacy_status status) {
        int code = exit_code(status);
        if (code != 0)
            report(code, kind, intricacy_last_error());
        intricacy_scenario_destroy(s);
        return code;
    };

    if (o.seed && (st = intricacy_scenario_set_seed(s, *o.seed)) != INTRICACY_OK)
        return finish(st);

    std::string out = o.out;
    if (out.empty())
        if (const char* env = std::getenv("INTRICACY_OUTPUT_DIR"))
            out = env;
    if (!out.empty() && (st = intricacy_scenario_set_output_dir(s, out.c_str())) != INTRICACY_OK)
        return finish(st);

    if (!o.formats.empty()) {
        bool csv = false, json = false;
        for (const auto& f : o.formats) {
            if (f == "csv")
                csv = true;
            else if (f == "json")
                json = true;
            else {
                intricacy_scenario_destroy(s);
                return report(1, kind, "unknown format '" + f + "' (csv, json)");
            }
        }
        if ((st = intricacy_scenario_set_formats(s, csv, json)) != INTRICACY_OK)
            return finish(st);
    }

    char* manifest = nullptr;
    st = intricacy_scenario_run(s, &manifest);
    if (st == INTRICACY_OK && !o.quiet)
        std::cout << manifest << "\n";
    intricacy_string_free(manifest);
    return finish(st);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Intricacy: entanglement waves, predecoherence and channel-probability collapse"};
    app.set_version_flag("--version", std::string(intricacy_version()));
    app.require_subcommand(1);

    Options o;
    std::string chosen;
    for (const char* const* k = intricacy_scenario_kinds(); *k; ++k) {
        std::string kind = *k;
        CLI::App* sub = app.add_subcommand(kind, "Run the '" + kind + "' scenario");
        sub->add_option("-c,--config", o.config, "JSON configuration file (defaults when omitted)")
            ->check(CLI::ExistingFile);
        sub->add_option("-s,--seed", o.seed, "Root seed, overriding the configuration");
        sub->add_option("-o,--out", o.out, "Output directory (default: $INTRICACY_OUTPUT_DIR)");
        sub->add_option("-f,--format", o.formats, "Output formats: csv, json")->delimiter(',');
        sub->add_flag("-q,--quiet", o.quiet, "Do not print the run manifest");
        sub->callback([&chosen, kind] { chosen = kind; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report(1, chosen, e.what());
    }
    return run(chosen, o);
}
