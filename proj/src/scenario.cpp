#include "intricacy/scenario.hpp"

#include "intricacy/error.hpp"
#include "intricacy/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>

namespace intricacy::scenario {

namespace {

bool non_negative_integer(const json& v)
{
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Walks one JSON object, reading known keys and recording errors with their
// full path. finish() reports every key that was never read.
class Reader {
public:
    Reader(const json* node, std::string path, std::vector<std::string>& errors)
        : node_(node), path_(std::move(path)), errors_(errors)
    {
        if (node_ && !node_->is_object()) {
            fail("", "must be an object");
            node_ = nullptr;
        }
    }

    bool present() const { return node_ != nullptr; }
    bool has(const char* key) const { return node_ && node_->contains(key); }

    void number(const char* key, double& out)
    {
        if (const json* v = take(key)) {
            if (v->is_number())
                out = v->get<double>();
            else
                fail(key, "must be a number");
        }
    }

    void count(const char* key, std::size_t& out)
    {
        if (const json* v = take(key)) {
            if (non_negative_integer(*v))
                out = v->get<std::size_t>();
            else
                fail(key, "must be a non-negative integer");
        }
    }

    void integer(const char* key, int& out)
    {
        if (const json* v = take(key)) {
            if (v->is_number_integer())
                out = v->get<int>();
            else
                fail(key, "must be an integer");
        }
    }

    void seed(const char* key, std::uint64_t& out)
    {
        if (const json* v = take(key)) {
            if (non_negative_integer(*v))
                out = v->get<std::uint64_t>();
            else
                fail(key, "must be an unsigned 64-bit integer");
        }
    }

    void boolean(const char* key, bool& out)
    {
        if (const json* v = take(key)) {
            if (v->is_boolean())
                out = v->get<bool>();
            else
                fail(key, "must be true or false");
        }
    }

    void text(const char* key, std::string& out)
    {
        if (const json* v = take(key)) {
            if (v->is_string())
                out = v->get<std::string>();
            else
                fail(key, "must be a string");
        }
    }

    void numbers(const char* key, std::vector<double>& out)
    {
        if (const json* v = take(key)) {
            if (!v->is_array() || v->empty() ||
                !std::all_of(v->begin(), v->end(), [](const json& e) { return e.is_number(); }))
                fail(key, "must be a non-empty array of numbers");
            else
                out = v->get<std::vector<double>>();
        }
    }

    void booleans(const char* key, std::vector<bool>& out)
    {
        if (const json* v = take(key)) {
            if (!v->is_array() || !std::all_of(v->begin(), v->end(), [](const json& e) { return e.is_boolean(); }))
                fail(key, "must be an array of true/false");
            else
                out = v->get<std::vector<bool>>();
        }
    }

    /// Optional number; JSON null clears it.
    void optional_number(const char* key, std::optional<double>& out)
    {
        if (const json* v = take(key)) {
            if (v->is_null())
                out.reset();
            else if (v->is_number())
                out = v->get<double>();
            else
                fail(key, "must be a number or null");
        }
    }

    /// Enumerated string converted by `parse` (which throws ConfigError).
    template <class T, class F>
    void choice(const char* key, T& out, F parse)
    {
        if (const json* v = take(key)) {
            if (!v->is_string()) {
                fail(key, "must be a string");
                return;
            }
            try {
                out = parse(v->get<std::string>());
            } catch (const ConfigError& e) {
                fail(key, e.what());
            }
        }
    }

    Reader child(const char* key)
    {
        return Reader(take(key), join(key), errors_);
    }

    const json* raw(const char* key) { return take(key); }

    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void fail(const std::string& key, const std::string& reason)
    {
        std::string p = key.empty() ? path_ : join(key);
        errors_.push_back((p.empty() ? std::string("<root>") : p) + ": " + reason);
    }

    void finish()
    {
        if (!node_)
            return;
        for (auto it = node_->begin(); it != node_->end(); ++it)
            if (!seen_.count(it.key()))
                errors_.push_back(join(it.key()) + ": unknown key");
    }

private:
    const json* take(const char* key)
    {
        if (!node_ || !node_->contains(key))
            return nullptr;
        seen_.insert(key);
        return &(*node_)[key];
    }

    const json* node_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
};

// Runs a validator, turning a ConfigError into an error entry at `path`.
void check(std::vector<std::string>& errors, const std::string& path, const std::function<void()>& validator)
{
    try {
        validator();
    } catch (const ConfigError& e) {
        errors.push_back(path + ": " + e.what());
    }
}

void read_detector(Reader r, detector::DetectorParams& d)
{
    r.number("temperature", d.temperature);
    r.number("atom_mass", d.atom_mass);
    r.number("mean_free_path", d.mean_free_path);
    r.number("mean_free_time", d.mean_free_time);
    r.number("number_density", d.number_density);
    r.number("box_size", d.box_size);
    r.number("track_length", d.track_length);
    r.number("excitation_spacing", d.excitation_spacing);
    r.number("cell_size", d.cell_size);
    r.number("env_number_density", d.env_number_density);
    r.number("env_molecule_mass", d.env_molecule_mass);
    r.finish();
}

json detector_json(const detector::DetectorParams& d)
{
    return {{"temperature", d.temperature},
            {"atom_mass", d.atom_mass},
            {"mean_free_path", d.mean_free_path},
            {"mean_free_time", d.mean_free_time},
            {"number_density", d.number_density},
            {"box_size", d.box_size},
            {"track_length", d.track_length},
            {"excitation_spacing", d.excitation_spacing},
            {"cell_size", d.cell_size},
            {"env_number_density", d.env_number_density},
            {"env_molecule_mass", d.env_molecule_mass}};
}

void read_field(Reader r, FieldBlock& f)
{
    r.integer("dimension", f.dimension);
    r.count("points", f.points);
    r.number("spacing", f.spacing);
    r.number("t_end", f.t_end);
    r.number("dt", f.dt);
    r.number("diffusion", f.diffusion);
    r.number("tau", f.tau);
    r.number("seed_width", f.seed_width);
    r.number("seed_value", f.seed_value);
    r.number("source_rate", f.source_rate);
    r.number("source_duration", f.source_duration);
    r.number("snapshot_interval", f.snapshot_interval);
    r.finish();
}

void validate_field(const FieldBlock& f)
{
    if (f.dimension != 1 && f.dimension != 3)
        throw ConfigError("dimension must be 1 or 3");
    if (f.points < 3)
        throw ConfigError("points must be at least 3");
    if (f.dimension == 3 && f.points > 128)
        throw ConfigError("points per axis above 128 in 3D");
    if (!(f.spacing > 0.0) || !(f.t_end > 0.0) || !(f.dt > 0.0) || !(f.tau > 0.0) || !(f.diffusion >= 0.0))
        throw ConfigError("spacing, t_end, dt, tau must be positive and diffusion non-negative");
    if (!(f.seed_value >= 0.0) || f.seed_value > 1.0)
        throw ConfigError("seed_value must lie in [0, 1]");
    if (!(f.seed_width >= 0.0) || !(f.source_rate >= 0.0) || !(f.source_duration >= 0.0))
        throw ConfigError("seed_width, source_rate, source_duration must be non-negative");
    if (!(f.snapshot_interval > 0.0))
        throw ConfigError("snapshot_interval must be positive");
}

json field_json(const FieldBlock& f)
{
    return {{"dimension", f.dimension},
            {"points", f.points},
            {"spacing", f.spacing},
            {"t_end", f.t_end},
            {"dt", f.dt},
            {"diffusion", f.diffusion},
            {"tau", f.tau},
            {"seed_width", f.seed_width},
            {"seed_value", f.seed_value},
            {"source_rate", f.source_rate},
            {"source_duration", f.source_duration},
            {"snapshot_interval", f.snapshot_interval}};
}

void read_kernel(Reader r, sectors::GaussianKernel& k)
{
    r.number("strength", k.strength);
    r.number("range", k.range);
    r.finish();
}

void read_packet(Reader r, sectors::WavePacket& p)
{
    r.number("center", p.center);
    r.number("width", p.width);
    r.number("momentum", p.momentum);
    r.finish();
}

json packet_json(const sectors::WavePacket& p)
{
    return {{"center", p.center}, {"width", p.width}, {"momentum", p.momentum}};
}

void read_sectors(Reader r, SectorsBlock& s, std::vector<std::string>& errors)
{
    auto& m = s.model;
    r.integer("atoms", m.atoms);
    r.count("grid_points", m.grid_points);
    r.number("spacing", m.spacing);
    r.number("particle_mass", m.particle_mass);
    r.number("atom_mass", m.atom_mass);
    read_kernel(r.child("particle_atom"), m.particle_atom);
    read_kernel(r.child("atom_atom"), m.atom_atom);
    read_packet(r.child("particle"), m.particle);
    if (const json* packets = r.raw("atom_packets")) {
        if (!packets->is_array()) {
            r.fail("atom_packets", "must be an array of packets");
        } else {
            m.atom_packets.clear();
            for (std::size_t i = 0; i < packets->size(); ++i) {
                sectors::WavePacket p;
                read_packet(Reader(&(*packets)[i], r.join("atom_packets[" + std::to_string(i) + "]"), errors), p);
                m.atom_packets.push_back(p);
            }
        }
    } else if (m.atoms >= 1 && m.atoms <= 3) {
        m.atom_packets.clear();
        for (int a = 0; a < m.atoms; ++a)
            m.atom_packets.push_back({8.0 + 3.0 * a, 1.5, 0.0});
    }
    r.boolean("bose_symmetric", m.bose_symmetric);
    r.count("amplitude_cap", m.amplitude_cap);
    r.number("dt", s.evolve.dt);
    r.count("steps", s.evolve.steps);
    r.number("norm_tolerance", s.evolve.norm_tolerance);
    Reader region = r.child("region");
    region.count("lo", s.region.lo);
    region.count("hi", s.region.hi);
    region.finish();
    r.finish();
}

void read_collapse(Reader r, CollapseBlock& c, std::vector<std::string>& errors)
{
    r.numbers("p", c.p);
    bool have_intricacy = false;
    bool have_mute = r.has("mute");
    r.booleans("mute", c.mute);

    Reader sched = r.child("schedule");
    sched.choice("kind", c.schedule, collapse::schedule_kind_from_string);
    have_intricacy = sched.has("intricacy");
    sched.numbers("intricacy", c.intricacy);
    sched.number("tau", c.schedule_tau);
    sched.number("rate", c.cascade_rate);
    sched.count("channel", c.field_channel);
    if (sched.has("field"))
        read_field(sched.child("field"), c.field);
    sched.finish();

    // Defaults: every channel but the last carries intricacy 10, the last is mute.
    if (!have_intricacy) {
        c.intricacy.assign(c.p.size(), 10.0);
        if (!c.intricacy.empty())
            c.intricacy.back() = 0.0;
    }
    if (!have_mute) {
        c.mute.assign(c.p.size(), false);
        for (std::size_t j = 0; j < c.p.size(); ++j)
            c.mute[j] = c.schedule == collapse::ScheduleKind::from_field ? j != c.field_channel
                                                                          : (j < c.intricacy.size() && c.intricacy[j] == 0.0);
    }

    Reader model = r.child("model");
    model.text("profile", c.profile);
    model.number("exponent", c.profile_exponent);
    model.number("prefactor", c.prefactor);
    model.number("tau", c.tau);
    model.finish();

    Reader step = r.child("step");
    step.number("dt", c.policy.dt);
    step.number("sigma_fraction", c.policy.sigma_fraction);
    step.number("absorption_threshold", c.policy.absorption_threshold);
    step.choice("noise", c.policy.noise, [](const std::string& s) {
        if (s == "gaussian")
            return collapse::NoiseKind::gaussian;
        if (s == "compound-poisson")
            return collapse::NoiseKind::compound_poisson;
        throw ConfigError("unknown noise '" + s + "' (gaussian, compound-poisson)");
    });
    step.number("jump_fraction", c.policy.jump_fraction);
    step.finish();

    r.count("trials", c.trials);
    r.count("max_steps", c.max_steps);
    r.count("threads", c.threads);
    r.finish();

    const std::string path = "collapse";
    check(errors, path + ".p", [&] { collapse::ChannelState::make(c.p, c.mute.size() == c.p.size() ? c.mute : std::vector<bool>{}); });
    if (c.mute.size() != c.p.size())
        errors.push_back(path + ".mute: needs one flag per channel");
    if (c.schedule != collapse::ScheduleKind::from_field) {
        if (c.intricacy.size() != c.p.size())
            errors.push_back(path + ".schedule.intricacy: needs one value per channel");
        else
            for (std::size_t j = 0; j < c.p.size() && j < c.mute.size(); ++j)
                if (c.mute[j] && c.intricacy[j] != 0.0)
                    errors.push_back(path + ".schedule.intricacy: mute channel " + std::to_string(j) +
                                     " must have zero intricacy");
        check(errors, path + ".schedule.intricacy", [&] { collapse::IntricacySchedule::cells_for_sums(c.intricacy); });
        if (c.schedule != collapse::ScheduleKind::constant) {
            bool bounded = std::all_of(c.intricacy.begin(), c.intricacy.end(), [](double v) { return v >= 0.0; });
            if (bounded && c.schedule == collapse::ScheduleKind::logistic && !(c.schedule_tau > 0.0))
                errors.push_back(path + ".schedule.tau: must be positive");
            if (c.schedule == collapse::ScheduleKind::cascade && !(c.cascade_rate >= 0.0))
                errors.push_back(path + ".schedule.rate: must be non-negative");
        }
    } else {
        if (c.field_channel >= c.p.size())
            errors.push_back(path + ".schedule.channel: out of range");
        else if (c.field_channel < c.mute.size() && c.mute[c.field_channel])
            errors.push_back(path + ".schedule.channel: the field cannot feed a mute channel");
        check(errors, path + ".schedule.field", [&] {
            validate_field(c.field);
            if (c.field.dimension != 1)
                throw ConfigError("only 1D fields feed a collapse schedule");
        });
    }
    if (c.profile != "interpolation")
        check(errors, path + ".model.profile", [&] { collapse::FluctuationModel::custom(c.profile, c.profile_exponent); });
    if (!(c.prefactor > 0.0))
        errors.push_back(path + ".model.prefactor: must be positive");
    if (!(c.tau > 0.0))
        errors.push_back(path + ".model.tau: must be positive");
    if (!(c.policy.dt > 0.0) || !(c.policy.sigma_fraction > 0.0) || !(c.policy.absorption_threshold >= 0.0) ||
        !(c.policy.jump_fraction > 0.0))
        errors.push_back(path + ".step: dt, sigma_fraction, jump_fraction must be positive, absorption_threshold >= 0");
    if (c.trials < 1000)
        errors.push_back(path + ".trials: at least 1000 trials are required");
    if (c.max_steps == 0)
        errors.push_back(path + ".max_steps: must be positive");
    if (c.threads == 0)
        errors.push_back(path + ".threads: must be positive");
}

const char* noise_name(collapse::NoiseKind n)
{
    return n == collapse::NoiseKind::gaussian ? "gaussian" : "compound-poisson";
}

collapse::FluctuationModel make_model(const CollapseBlock& c)
{
    collapse::FluctuationModel m =
        c.profile == "interpolation" ? collapse::FluctuationModel{} : collapse::FluctuationModel::custom(c.profile, c.profile_exponent);
    m.prefactor = c.prefactor;
    m.tau = c.tau;
    return m;
}

kinetics::FieldHistory run_field(const FieldBlock& f, kinetics::IntricacyField* final_field)
{
    kinetics::IntricacyField field = f.dimension == 1 ? kinetics::IntricacyField::line(f.points, f.spacing)
                                                      : kinetics::IntricacyField::cube(f.points, f.spacing);
    std::vector<double> rate(field.size(), 0.0);
    if (f.dimension == 1) {
        for (std::size_t i = 0; i < f.points; ++i)
            if (static_cast<double>(i) * f.spacing < f.seed_width) {
                field.at(i) = f.seed_value;
                rate[i] = f.source_rate;
            }
    } else {
        const std::size_t c = f.points / 2;
        for (std::size_t i = 0; i < f.points; ++i) {
            field.at(i, c, c) = f.seed_value;
            rate[field.index(i, c, c)] = f.source_rate;
        }
    }
    kinetics::EvolveOptions ev;
    ev.t_end = f.t_end;
    ev.dt = f.dt;
    ev.diffusion = f.diffusion;
    ev.tau = f.tau;
    ev.snapshot_interval = f.snapshot_interval;
    if (f.source_rate > 0.0 && f.source_duration > 0.0)
        ev.source = kinetics::SourceTerm{rate, f.source_duration};
    kinetics::FieldHistory history;
    kinetics::IntricacyField out = kinetics::evolve(std::move(field), ev, &history);
    if (final_field)
        *final_field = std::move(out);
    return history;
}

double median(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double hi = *mid;
    if (v.size() % 2 == 1)
        return hi;
    double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

json number_or_null(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

// Collects the files a scenario produces.
struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;

    void add(std::string name, std::string contents) { files.emplace_back(std::move(name), std::move(contents)); }
};

std::string dump(const json& j)
{
    return j.dump(2) + "\n";
}

json run_estimate(const ScenarioConfig& c, Outputs& out)
{
    const auto& d = c.detector;
    detector::EstimateReport r =
        c.estimate.front_width_mfp ? detector::detector_estimates(d, *c.estimate.front_width_mfp) : detector::detector_estimates(d);
    detector::FluctuationRate a = detector::fluctuation_rate_A(d, c.estimate.p1, 1.0 - c.estimate.p1);

    json s = {{"units", "CGS"},
              {"thermal_velocity", r.thermal_velocity},
              {"front_velocity", r.front_velocity},
              {"diffusion_coefficient", r.diffusion_coefficient},
              {"fill_time", r.fill_time},
              {"collision_rate", r.collision_rate},
              {"concurrent_waves", r.concurrent_waves},
              {"front_width", r.front_width},
              {"active_front_regions", r.active_front_regions},
              {"fluctuation_rate", r.fluctuation_rate},
              {"rate_chain",
               {{"A", a.rate},
                {"p1p2", a.p1p2},
                {"variance_rate", a.rate * a.p1p2},
                {"cells_on_track", a.cells_on_track},
                {"cell_intricacy", a.cell_intricacy},
                {"summed_intricacy", a.summed_intricacy},
                {"quoted_scaling", a.quoted_scaling}}}};

    io::CsvTable t("CGS (cm, s, g, K)", {"quantity", "value", "unit"});
    auto row = [&](const char* q, double v, const char* u) { t.add_row(std::vector<std::string>{q, io::format_double(v), u}); };
    row("thermal_velocity", r.thermal_velocity, "cm/s");
    row("front_velocity", r.front_velocity, "cm/s");
    row("diffusion_coefficient", r.diffusion_coefficient, "cm^2/s");
    row("fill_time", r.fill_time, "s");
    row("collision_rate", r.collision_rate, "1/s");
    row("concurrent_waves", r.concurrent_waves, "1");
    row("front_width", r.front_width, "cm");
    row("active_front_regions", r.active_front_regions, "1");
    row("fluctuation_rate", r.fluctuation_rate, "1/s");
    row("quoted_scaling", a.quoted_scaling, "1/s");
    if (c.write_csv)
        out.add("estimate.csv", t.str());
    return s;
}

json run_wavefront(const ScenarioConfig& c, Outputs& out)
{
    const auto& w = c.wavefront;
    kinetics::WaveProfile profile = kinetics::solve_traveling_wave(w.wave);
    json s = {{"units", "reduced (lambda, tau)"},
              {"front_slope", profile.front_slope},
              {"bisection_slope", profile.bisection_slope},
              {"max_residual", profile.max_residual},
              {"tail_deviation", profile.tail_deviation()},
              {"rise_width_01_99", profile.rise_width(0.01, 0.99)},
              {"samples", profile.z.size()}};

    if (c.write_csv) {
        io::CsvTable t("z in mean free paths (lambda); g dimensionless", {"z_lambda", "g", "dg_dz_per_lambda"});
        for (std::size_t i = 0; i < profile.z.size(); ++i)
            t.add_row(std::vector<double>{profile.z[i], profile.g[i], profile.dg[i]});
        out.add("wave_profile.csv", t.str());
    }

    if (w.run_fronts) {
        kinetics::FrontRunOptions fo = w.front;
        fo.mode = kinetics::FrontMode::free;
        kinetics::FrontRun free_run = kinetics::run_front(fo);
        fo.mode = kinetics::FrontMode::imposed;
        kinetics::FrontRun imposed_run = kinetics::run_front(fo);

        const double oracle = kinetics::pulled_front_speed(fo.diffusion, fo.tau);
        const double lambda_per_tau = c.detector.mean_free_path / c.detector.mean_free_time;
        json fronts = {{"free_level_speed", number_or_null(free_run.level_speed)},
                       {"pulled_front_oracle", oracle},
                       {"imposed_boundary_speed", number_or_null(imposed_run.boundary_speed)},
                       {"imposed_level_speed", number_or_null(imposed_run.level_speed)},
                       {"imposed_velocity", fo.front_velocity},
                       {"lambda_per_tau_cm_s", lambda_per_tau}};
        if (free_run.level_speed) {
            fronts["free_relative_error"] = *free_run.level_speed / oracle - 1.0;
            fronts["free_speed_cm_s"] = *free_run.level_speed * lambda_per_tau;
            fronts["free_over_imposed"] = *free_run.level_speed / fo.front_velocity;
        }
        if (imposed_run.boundary_speed)
            fronts["imposed_speed_cm_s"] = *imposed_run.boundary_speed * lambda_per_tau;
        s["fronts"] = fronts;

        if (c.write_csv) {
            io::CsvTable t("time in tau; positions in lambda",
                           {"time_tau", "free_crossing_lambda", "imposed_crossing_lambda", "imposed_boundary_lambda"});
            const auto& fs = free_run.history.snapshots;
            const auto& is = imposed_run.history.snapshots;
            for (std::size_t i = 0; i < std::min(fs.size(), is.size()); ++i) {
                auto fx = kinetics::level_crossing(fs[i].values, free_run.history.spacing, fo.level);
                auto ix = kinetics::level_crossing(is[i].values, imposed_run.history.spacing, fo.level);
                t.add_row(std::vector<std::string>{io::format_double(fs[i].time), fx ? io::format_double(*fx) : "nan",
                                                   ix ? io::format_double(*ix) : "nan",
                                                   io::format_double(imposed_run.boundary[i])});
            }
            out.add("fronts.csv", t.str());
        }
    }
    return s;
}

json run_field_kind(const ScenarioConfig& c, Outputs& out)
{
    const auto& f = c.field;
    kinetics::IntricacyField final_field = kinetics::IntricacyField::line(1, 1.0);
    kinetics::FieldHistory history = run_field(f, &final_field);

    const double cell_volume = std::pow(f.spacing, f.dimension);
    const std::size_t mid = f.points / 2;
    auto extent_of = [&](const std::vector<double>& v) -> std::optional<double> {
        if (f.dimension == 1)
            return kinetics::level_crossing(v, f.spacing, 0.5);
        // Radius of the f1 >= 0.5 region around the seed line, in the mid slice.
        std::vector<double> radial;
        for (std::size_t j = mid; j < f.points; ++j)
            radial.push_back(v[final_field.index(mid, j, mid)]);
        return kinetics::level_crossing(radial, f.spacing, 0.5);
    };

    io::CsvTable series("time in tau; total in lambda^dim; extent in lambda",
                        {"time_tau", "total_lambda_dim", "max_f1", "min_f1",
                         f.dimension == 1 ? "front_lambda" : "cylinder_radius_lambda"});
    for (const auto& snap : history.snapshots) {
        double total = 0.0;
        for (double v : snap.values)
            total += v;
        auto [lo, hi] = std::minmax_element(snap.values.begin(), snap.values.end());
        auto e = extent_of(snap.values);
        series.add_row(std::vector<std::string>{io::format_double(snap.time), io::format_double(total * cell_volume),
                                                io::format_double(*hi), io::format_double(*lo),
                                                e ? io::format_double(*e) : "nan"});
    }

    std::vector<std::string> cols;
    if (f.dimension == 1)
        cols = {"i", "x_lambda", "f1"};
    else
        cols = {"i", "j", "k", "f1"};
    io::CsvTable field("grid indices; x in lambda; f1 dimensionless", cols);
    for (std::size_t k = 0; k < (f.dimension == 3 ? f.points : 1); ++k)
        for (std::size_t j = 0; j < (f.dimension == 3 ? f.points : 1); ++j)
            for (std::size_t i = 0; i < f.points; ++i) {
                double v = final_field.at(i, j, k);
                if (f.dimension == 1)
                    field.add_row(std::vector<double>{static_cast<double>(i), static_cast<double>(i) * f.spacing, v});
                else
                    field.add_row(std::vector<double>{static_cast<double>(i), static_cast<double>(j),
                                                      static_cast<double>(k), v});
            }
    if (c.write_csv) {
        out.add("field_series.csv", series.str());
        out.add("field_final.csv", field.str());
    }

    json s = {{"units", "reduced (lambda, tau)"},
              {"time", final_field.time()},
              {"total", final_field.total()},
              {"max_f1", final_field.max()},
              {"min_f1", final_field.min()},
              {"snapshots", history.snapshots.size()}};
    if (f.dimension == 1) {
        s["front_speed"] = number_or_null(kinetics::measure_front_speed(history, 0.5));
        s["pulled_front_oracle"] = kinetics::pulled_front_speed(f.diffusion, f.tau);
    } else {
        s["final_cylinder_radius"] = number_or_null(extent_of(history.snapshots.back().values));
        // Axial uniformity of the inflating cylinder: spread of f1 along the track.
        std::vector<double> axis;
        for (std::size_t i = 0; i < f.points; ++i)
            axis.push_back(final_field.at(i, mid, mid));
        auto [lo, hi] = std::minmax_element(axis.begin(), axis.end());
        s["track_min_f1"] = *lo;
        s["track_max_f1"] = *hi;
    }
    return s;
}

json run_sectors_kind(const ScenarioConfig& c, Outputs& out)
{
    const auto& sb = c.sectors;
    sectors::Generator gen(sb.model);
    sectors::SectorStack stack = sectors::initial_stack(sb.model);
    const std::size_t sectors_n = gen.sector_count();

    std::vector<std::string> cols{"time_hbar_units"};
    for (std::size_t q = 0; q < sectors_n; ++q) {
        std::string bits;
        for (int b = sb.model.atoms - 1; b >= 0; --b)
            bits += ((q >> b) & 1U) ? '1' : '0';
        cols.push_back("norm2_q" + bits);
    }
    cols.insert(cols.end(), {"total_norm2", "intricacy_diagonal", "intricacy_coherent"});
    io::CsvTable t("hbar = 1; time in units of hbar / energy unit; norms dimensionless", cols);

    const double sector0_start = stack.norm2(0);
    double sector0_drift = 0.0;
    auto record = [&](const sectors::SectorStack& s) {
        std::vector<double> row{s.time};
        for (std::size_t q = 0; q < sectors_n; ++q)
            row.push_back(s.norm2(q));
        row.push_back(s.total().squaredNorm());
        auto est = sectors::intricacy_from_sectors(s, sb.model.grid_points, sb.region);
        row.push_back(est.diagonal);
        row.push_back(est.coherent);
        t.add_row(row);
        sector0_drift = std::max(sector0_drift, std::abs(s.norm2(0) - sector0_start));
    };
    record(stack);
    sectors::SectorStack final_stack = sectors::evolve_sectors(stack, gen, sb.evolve, record);

    bool superset = true;
    auto pattern = gen.block_pattern();
    for (std::size_t q = 0; q < sectors_n; ++q)
        for (std::size_t qs = 0; qs < sectors_n; ++qs)
            if (pattern[q][qs] && ((q & qs) != qs || sectors::popcount(q) - sectors::popcount(qs) > 1))
                superset = false;

    if (c.write_csv)
        out.add("sectors_series.csv", t.str());
    auto est = sectors::intricacy_from_sectors(final_stack, sb.model.grid_points, sb.region);
    return {{"units", "hbar = 1"},
            {"kinetic_stencil", sectors::kKineticStencil},
            {"sectors", sectors_n},
            {"amplitudes", sb.model.amplitudes()},
            {"time", final_stack.time},
            {"total_norm2", final_stack.total().squaredNorm()},
            {"sector0_norm_drift", sector0_drift},
            {"block_pattern_superset", superset},
            {"stable_step", gen.stable_step()},
            {"intricacy_diagonal", est.diagonal},
            {"intricacy_coherent", est.coherent}};
}

json run_predecoherence_kind(const ScenarioConfig& c, Outputs& out)
{
    predecoherence::DisorderSpec spec = c.predecoherence.disorder;
    spec.seed = c.seed;
    predecoherence::EnsembleSummary e = predecoherence::run_ensemble(spec, c.predecoherence.samples);

    io::CsvTable t("traces dimensionless; KS dimensionless", {"sample", "k_plus", "k_minus", "ks"});
    double ks_sum = 0.0;
    for (const auto& s : e.samples) {
        t.add_row(std::vector<double>{static_cast<double>(s.index), s.k_plus, s.k_minus, s.ks});
        ks_sum += s.ks;
    }
    if (c.write_csv)
        out.add("predecoherence_samples.csv", t.str());
    return {{"size", spec.size},
            {"samples", e.samples.size()},
            {"family", predecoherence::to_string(spec.family)},
            {"construction", predecoherence::to_string(spec.construction)},
            {"mean_k", e.mean_k},
            {"std_error_k", e.std_error_k},
            {"reference_k", predecoherence::kDisorderTrace},
            {"relative_error", e.mean_k / predecoherence::kDisorderTrace - 1.0},
            {"mean_ks", ks_sum / static_cast<double>(e.samples.size())}};
}

json run_collapse_kind(const ScenarioConfig& c, Outputs& out)
{
    const auto& cb = c.collapse;
    collapse::ChannelState initial = collapse::ChannelState::make(cb.p, cb.mute);
    collapse::FluctuationModel model = make_model(cb);

    std::optional<collapse::IntricacySchedule> schedule;
    switch (cb.schedule) {
    case collapse::ScheduleKind::constant:
        schedule = collapse::IntricacySchedule::constant(collapse::IntricacySchedule::cells_for_sums(cb.intricacy));
        break;
    case collapse::ScheduleKind::logistic:
        schedule = collapse::IntricacySchedule::logistic(collapse::IntricacySchedule::cells_for_sums(cb.intricacy),
                                                         cb.schedule_tau);
        break;
    case collapse::ScheduleKind::cascade:
        schedule = collapse::IntricacySchedule::cascade(collapse::IntricacySchedule::cells_for_sums(cb.intricacy),
                                                        cb.cascade_rate);
        break;
    case collapse::ScheduleKind::from_field:
        schedule = collapse::IntricacySchedule::from_field(run_field(cb.field, nullptr), cb.field_channel, cb.p.size());
        break;
    }

    collapse::BornOptions bo;
    bo.trials = cb.trials;
    bo.seed = c.seed;
    bo.threads = cb.threads;
    bo.trial.max_steps = cb.max_steps;
    collapse::BornReport r = collapse::born_rule_experiment(initial, *schedule, model, cb.policy, bo);

    io::CsvTable t("collapse_time in tau; clamp_bias dimensionless; winner -1 = none",
                   {"trial", "winner", "collapse_time_steps", "collapse_time_tau", "clamp_bias"});
    std::vector<double> times;
    for (const auto& rec : r.records) {
        t.add_row(std::vector<std::string>{std::to_string(rec.trial), std::to_string(rec.winner),
                                           std::to_string(rec.steps), io::format_double(rec.collapse_time),
                                           io::format_double(rec.clamp_bias)});
        if (rec.winner >= 0)
            times.push_back(rec.collapse_time);
    }
    if (c.write_csv)
        out.add("collapse_trials.csv", t.str());

    const double med = median(times);
    return {{"trials", r.trials},
            {"initial_p", cb.p},
            {"wins", r.wins},
            {"frequency", r.frequency},
            {"std_error", r.std_error},
            {"no_collapse", r.no_collapse},
            {"failures", r.failures},
            {"revivals", r.revivals},
            {"max_clamp_bias", r.max_clamp_bias},
            {"median_collapse_time_tau", med},
            {"median_collapse_time_s", med * c.detector.mean_free_time},
            {"schedule", collapse::to_string(cb.schedule)},
            {"noise", noise_name(cb.policy.noise)},
            {"profile", model.profile_name}};
}

} // namespace

std::string to_string(Kind k)
{
    return kind_names()[static_cast<std::size_t>(k)];
}

const std::vector<std::string>& kind_names()
{
    static const std::vector<std::string> names{"estimate", "wavefront", "field", "sectors", "predecoherence", "collapse"};
    return names;
}

Kind kind_from_string(const std::string& s)
{
    const auto& names = kind_names();
    auto it = std::find(names.begin(), names.end(), s);
    if (it == names.end())
        throw ConfigError("unknown scenario kind '" + s + "'");
    return static_cast<Kind>(it - names.begin());
}

ScenarioConfig parse_config(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

ScenarioConfig parse_config(const char* text)
{
    return parse_config(std::string(text));
}

ScenarioConfig parse_config(const json& doc)
{
    std::vector<std::string> errors;
    ScenarioConfig c;
    Reader r(&doc, "", errors);
    if (!r.present())
        throw ConfigError("<root>: configuration must be a JSON object");

    if (!r.has("kind"))
        errors.push_back("kind: missing required key");
    r.choice("kind", c.kind, kind_from_string);
    r.seed("seed", c.seed);
    r.text("output_dir", c.output_dir);
    if (const json* f = r.raw("formats")) {
        c.write_csv = c.write_json = false;
        if (!f->is_array() || f->empty())
            r.fail("formats", "must be a non-empty array of \"csv\" / \"json\"");
        else
            for (const auto& e : *f) {
                if (e == "csv")
                    c.write_csv = true;
                else if (e == "json")
                    c.write_json = true;
                else
                    r.fail("formats", "unknown format " + e.dump());
            }
    }

    const bool uses_detector = c.kind == Kind::estimate || c.kind == Kind::wavefront || c.kind == Kind::collapse;
    if (r.has("detector") && !uses_detector)
        r.fail("detector", "not used by scenario kind '" + to_string(c.kind) + "'");
    read_detector(r.child("detector"), c.detector);
    check(errors, "detector", [&] { c.detector.validate(); });

    for (const auto& name : kind_names())
        if (name != to_string(c.kind) && r.has(name.c_str()))
            r.fail(name, "block does not apply to scenario kind '" + to_string(c.kind) + "'");

    switch (c.kind) {
    case Kind::estimate: {
        Reader e = r.child("estimate");
        e.optional_number("front_width_mfp", c.estimate.front_width_mfp);
        e.number("p1", c.estimate.p1);
        e.finish();
        if (c.estimate.front_width_mfp && !(*c.estimate.front_width_mfp > 0.0))
            errors.push_back("estimate.front_width_mfp: must be positive");
        if (!(c.estimate.p1 >= 0.0) || c.estimate.p1 > 1.0)
            errors.push_back("estimate.p1: must lie in [0, 1]");
        break;
    }
    case Kind::wavefront: {
        auto& w = c.wavefront;
        Reader e = r.child("wavefront");
        e.number("domain_length", w.wave.domain_length);
        e.number("tolerance", w.wave.tolerance);
        e.number("step", w.wave.step);
        e.count("output_stride", w.wave.output_stride);
        e.number("speed", w.wave.speed);
        e.number("diffusion", w.wave.diffusion);
        e.boolean("run_fronts", w.run_fronts);
        Reader fr = e.child("front");
        fr.number("length", w.front.length);
        fr.number("spacing", w.front.spacing);
        fr.number("dt", w.front.dt);
        fr.number("t_end", w.front.t_end);
        fr.number("diffusion", w.front.diffusion);
        fr.number("tau", w.front.tau);
        fr.number("seed_width", w.front.seed_width);
        fr.number("front_start", w.front.front_start);
        fr.number("front_velocity", w.front.front_velocity);
        fr.number("snapshot_interval", w.front.snapshot_interval);
        fr.number("level", w.front.level);
        fr.finish();
        e.finish();
        if (!(w.wave.domain_length >= 20.0))
            errors.push_back("wavefront.domain_length: must be at least 20 mean free paths");
        if (!(w.wave.tolerance > 0.0) || !(w.wave.step > 0.0) || w.wave.step > 0.01 || w.wave.output_stride == 0)
            errors.push_back("wavefront: tolerance > 0, 0 < step <= 0.01, output_stride > 0 required");
        if (!(w.wave.speed > 0.0) || !(w.wave.diffusion > 0.0))
            errors.push_back("wavefront: speed and diffusion must be positive");
        const auto& f = w.front;
        if (!(f.length > 0.0) || !(f.spacing > 0.0) || !(f.dt > 0.0) || !(f.t_end > 0.0) || !(f.tau > 0.0) ||
            !(f.diffusion > 0.0) || !(f.snapshot_interval > 0.0) || !(f.front_velocity > 0.0))
            errors.push_back("wavefront.front: lengths, steps, times, diffusion and velocity must be positive");
        if (!(f.level > 0.0) || !(f.level < 1.0))
            errors.push_back("wavefront.front.level: must lie in (0, 1)");
        break;
    }
    case Kind::field:
        read_field(r.child("field"), c.field);
        check(errors, "field", [&] { validate_field(c.field); });
        break;
    case Kind::sectors:
        read_sectors(r.child("sectors"), c.sectors, errors);
        check(errors, "sectors", [&] { c.sectors.model.validate(); });
        if (!(c.sectors.evolve.dt > 0.0) || c.sectors.evolve.steps == 0 || !(c.sectors.evolve.norm_tolerance > 0.0))
            errors.push_back("sectors: dt, steps and norm_tolerance must be positive");
        if (c.sectors.region.lo >= c.sectors.region.hi)
            errors.push_back("sectors.region: lo must be below hi");
        break;
    case Kind::predecoherence: {
        auto& p = c.predecoherence;
        Reader e = r.child("predecoherence");
        e.count("size", p.disorder.size);
        e.count("samples", p.samples);
        e.choice("family", p.disorder.family, predecoherence::noise_family_from_string);
        e.choice("construction", p.disorder.construction, predecoherence::construction_from_string);
        e.finish();
        check(errors, "predecoherence", [&] { p.disorder.validate(); });
        if (p.disorder.size > 4096)
            errors.push_back("predecoherence.size: at most 4096");
        if (p.samples == 0)
            errors.push_back("predecoherence.samples: must be positive");
        break;
    }
    case Kind::collapse:
        read_collapse(r.child("collapse"), c.collapse, errors);
        break;
    }
    r.finish();

    if (!errors.empty()) {
        std::ostringstream os;
        os << "invalid configuration:";
        for (const auto& e : errors)
            os << "\n  " << e;
        throw ConfigError(os.str());
    }
    return c;
}

json ScenarioConfig::echo() const
{
    json j = {{"kind", to_string(kind)}, {"seed", seed}, {"output_dir", output_dir}};
    json formats = json::array();
    if (write_csv)
        formats.push_back("csv");
    if (write_json)
        formats.push_back("json");
    j["formats"] = formats;
    if (kind == Kind::estimate || kind == Kind::wavefront || kind == Kind::collapse)
        j["detector"] = detector_json(detector);

    switch (kind) {
    case Kind::estimate:
        j["estimate"] = {{"front_width_mfp", number_or_null(estimate.front_width_mfp)}, {"p1", estimate.p1}};
        break;
    case Kind::wavefront: {
        const auto& w = wavefront;
        j["wavefront"] = {{"domain_length", w.wave.domain_length},
                          {"tolerance", w.wave.tolerance},
                          {"step", w.wave.step},
                          {"output_stride", w.wave.output_stride},
                          {"speed", w.wave.speed},
                          {"diffusion", w.wave.diffusion},
                          {"run_fronts", w.run_fronts},
                          {"front",
                           {{"length", w.front.length},
                            {"spacing", w.front.spacing},
                            {"dt", w.front.dt},
                            {"t_end", w.front.t_end},
                            {"diffusion", w.front.diffusion},
                            {"tau", w.front.tau},
                            {"seed_width", w.front.seed_width},
                            {"front_start", w.front.front_start},
                            {"front_velocity", w.front.front_velocity},
                            {"snapshot_interval", w.front.snapshot_interval},
                            {"level", w.front.level}}}};
        break;
    }
    case Kind::field:
        j["field"] = field_json(field);
        break;
    case Kind::sectors: {
        const auto& m = sectors.model;
        json packets = json::array();
        for (const auto& p : m.atom_packets)
            packets.push_back(packet_json(p));
        j["sectors"] = {{"atoms", m.atoms},
                        {"grid_points", m.grid_points},
                        {"spacing", m.spacing},
                        {"particle_mass", m.particle_mass},
                        {"atom_mass", m.atom_mass},
                        {"particle_atom", {{"strength", m.particle_atom.strength}, {"range", m.particle_atom.range}}},
                        {"atom_atom", {{"strength", m.atom_atom.strength}, {"range", m.atom_atom.range}}},
                        {"particle", packet_json(m.particle)},
                        {"atom_packets", packets},
                        {"bose_symmetric", m.bose_symmetric},
                        {"amplitude_cap", m.amplitude_cap},
                        {"dt", sectors.evolve.dt},
                        {"steps", sectors.evolve.steps},
                        {"norm_tolerance", sectors.evolve.norm_tolerance},
                        {"region", {{"lo", sectors.region.lo}, {"hi", sectors.region.hi}}}};
        break;
    }
    case Kind::predecoherence:
        j["predecoherence"] = {{"size", predecoherence.disorder.size},
                               {"samples", predecoherence.samples},
                               {"family", predecoherence::to_string(predecoherence.disorder.family)},
                               {"construction", predecoherence::to_string(predecoherence.disorder.construction)}};
        break;
    case Kind::collapse: {
        const auto& cb = collapse;
        json sched = {{"kind", collapse::to_string(cb.schedule)}};
        if (cb.schedule == collapse::ScheduleKind::from_field) {
            sched["field"] = field_json(cb.field);
            sched["channel"] = cb.field_channel;
        } else {
            sched["intricacy"] = cb.intricacy;
            if (cb.schedule == collapse::ScheduleKind::logistic)
                sched["tau"] = cb.schedule_tau;
            if (cb.schedule == collapse::ScheduleKind::cascade)
                sched["rate"] = cb.cascade_rate;
        }
        j["collapse"] = {{"p", cb.p},
                         {"mute", cb.mute},
                         {"schedule", sched},
                         {"model",
                          {{"profile", cb.profile},
                           {"exponent", cb.profile_exponent},
                           {"prefactor", cb.prefactor},
                           {"tau", cb.tau}}},
                         {"step",
                          {{"dt", cb.policy.dt},
                           {"sigma_fraction", cb.policy.sigma_fraction},
                           {"absorption_threshold", cb.policy.absorption_threshold},
                           {"noise", noise_name(cb.policy.noise)},
                           {"jump_fraction", cb.policy.jump_fraction}}},
                         {"trials", cb.trials},
                         {"max_steps", cb.max_steps},
                         {"threads", cb.threads}};
        break;
    }
    }
    return j;
}

json RunManifest::to_json() const
{
    json files = json::array();
    for (const auto& o : outputs)
        files.push_back({{"name", o.name}, {"checksum", o.checksum}, {"bytes", o.bytes}});
    return {{"version", version}, {"config", config}, {"wall_time_s", wall_time}, {"outputs", files},
            {"summary", summary}};
}

const char* version()
{
    return INTRICACY_VERSION;
}

RunManifest run_scenario(const ScenarioConfig& config)
{
    const auto start = std::chrono::steady_clock::now();
    Outputs out;
    json summary;
    const std::string kind = to_string(config.kind);
    try {
        switch (config.kind) {
        case Kind::estimate: summary = run_estimate(config, out); break;
        case Kind::wavefront: summary = run_wavefront(config, out); break;
        case Kind::field: summary = run_field_kind(config, out); break;
        case Kind::sectors: summary = run_sectors_kind(config, out); break;
        case Kind::predecoherence: summary = run_predecoherence_kind(config, out); break;
        case Kind::collapse: summary = run_collapse_kind(config, out); break;
        }
    } catch (const ConfigError& e) {
        throw ConfigError(kind + " scenario: " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(kind + " scenario: " + e.what());
    }
    summary["kind"] = kind;
    summary["seed"] = config.seed;
    if (config.write_json)
        out.add(kind + "_summary.json", dump(summary));

    RunManifest m;
    m.config = config.echo();
    m.version = version();
    m.summary = summary;
    for (const auto& [name, contents] : out.files) {
        m.outputs.push_back({name, io::hex64(io::fnv1a64(contents)), contents.size()});
        if (!config.output_dir.empty())
            io::write_file(std::filesystem::path(config.output_dir) / name, contents);
    }
    m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!config.output_dir.empty())
        io::write_file(std::filesystem::path(config.output_dir) / "manifest.json", dump(m.to_json()));
    return m;
}

} // namespace intricacy::scenario
