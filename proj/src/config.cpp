#include "msek/config.hpp"

#include "msek/core.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace msek {

namespace {

struct Field {
    const char* key;
    std::function<void(RunConfig&, double)> set;
    std::function<double(const RunConfig&)> get;
};

#define MSEK_FIELD(key, member) \
    Field{key, [](RunConfig& c, double v) { c.member = static_cast<decltype(c.member)>(v); }, \
          [](const RunConfig& c) { return static_cast<double>(c.member); }}

const std::vector<Field>& fields()
{
    static const std::vector<Field> f{
        MSEK_FIELD("max_servers", system.max_servers),
        MSEK_FIELD("initial_servers", system.initial_servers),
        MSEK_FIELD("initial_dimmer", system.initial_dimmer),
        MSEK_FIELD("boot_delay", system.boot_delay),
        MSEK_FIELD("service_mandatory", system.service_mandatory),
        MSEK_FIELD("service_optional", system.service_optional),
        MSEK_FIELD("control_period", system.control_period),
        MSEK_FIELD("token_budget", system.token_budget),
        MSEK_FIELD("rt_threshold", system.rt_threshold),
        MSEK_FIELD("http_timeout", system.http_timeout),
        MSEK_FIELD("http_retries", system.http_retries),
        MSEK_FIELD("utility.revenue_optional", utility.revenue_optional),
        MSEK_FIELD("utility.revenue_mandatory", utility.revenue_mandatory),
        MSEK_FIELD("utility.server_cost", utility.server_cost),
        MSEK_FIELD("utility.rt_threshold", utility.rt_threshold),
        MSEK_FIELD("utility.penalty_multiplier", utility.penalty_multiplier),
        MSEK_FIELD("reactive.rt_hi", reactive.rt_hi),
        MSEK_FIELD("reactive.rt_lo", reactive.rt_lo),
        MSEK_FIELD("reactive.util_lo", reactive.util_lo),
    };
    return f;
}

#undef MSEK_FIELD

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw Error(Errc::InvalidConfig, what);
}

} // namespace

void SystemConfig::validate() const
{
    require(max_servers >= 1, "max_servers must be >= 1");
    require(initial_servers >= 1 && initial_servers <= max_servers,
            "initial_servers must be in 1..max_servers");
    require(initial_dimmer >= 0.0 && initial_dimmer <= 1.0, "initial_dimmer must be in [0,1]");
    require(boot_delay > 0.0, "boot_delay must be positive");
    require(service_mandatory > 0.0, "service_mandatory must be positive");
    require(service_optional > 0.0, "service_optional must be positive");
    require(control_period > 0.0, "control_period must be positive");
    require(token_budget > 0, "token_budget must be positive");
    require(rt_threshold > 0.0, "rt_threshold must be positive");
    require(http_timeout > 0.0 && http_timeout < control_period,
            "http_timeout must be positive and below control_period");
    require(http_retries >= 0, "http_retries must be >= 0");
}

void UtilityParams::validate() const
{
    require(revenue_mandatory > 0.0 && revenue_optional > revenue_mandatory,
            "need revenue_optional > revenue_mandatory > 0");
    require(server_cost >= 0.0, "server_cost must be >= 0");
    require(rt_threshold > 0.0, "utility rt_threshold must be positive");
    require(penalty_multiplier >= 0.0, "penalty_multiplier must be >= 0");
}

RunConfig parse_config(const std::string& text)
{
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(Errc::InvalidConfig, "line " + std::to_string(lineno) + ": expected key=value");
        const auto key = trim(line.substr(0, eq));
        const auto value = parse_number(line.substr(eq + 1));
        if (!value)
            throw Error(Errc::InvalidConfig, "line " + std::to_string(lineno) + ": non-numeric value");
        bool known = false;
        for (const auto& f : fields()) {
            if (key == f.key) {
                f.set(cfg, *value);
                known = true;
                break;
            }
        }
        if (!known)
            throw Error(Errc::InvalidConfig, "line " + std::to_string(lineno) + ": unknown key '" +
                                                 std::string(key) + "'");
    }
    cfg.system.validate();
    cfg.utility.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::IoError, "cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string render_config(const RunConfig& cfg)
{
    std::string out;
    for (const auto& f : fields()) {
        out += f.key;
        out += '=';
        out += format_number(f.get(cfg));
        out += '\n';
    }
    return out;
}

std::string config_hash(const RunConfig& cfg)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : render_config(cfg)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace msek
