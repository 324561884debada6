#include "socrm/suite.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "socrm/error.hpp"
#include "socrm/io.hpp"
#include "socrm/random.hpp"

namespace socrm {

WorkloadFamily family_a()
{
    return {"A", 0.0, 0.4, 0.55, 0.95, 0.1, 0.4};
}

WorkloadFamily family_b()
{
    return {"B", 0.5, 0.9, 0.05, 0.35, 0.1, 0.4};
}

WorkloadFamily family_from_string(const std::string &name)
{
    if (name == "A" || name == "a") {
        return family_a();
    }
    if (name == "B" || name == "b") {
        return family_b();
    }
    throw std::invalid_argument("unknown workload family '" + name + "' (expected A or B)");
}

bool families_overlap(const WorkloadFamily &a, const WorkloadFamily &b)
{
    return a.mem_lo <= b.mem_hi && b.mem_lo <= a.mem_hi;
}

Suite generate_suite(const SocDescriptor &soc, const WorkloadFamily &family,
                     const SuiteOptions &options)
{
    validate(soc);
    if (options.applications < 0 || options.snippets_per_application < 0) {
        throw std::invalid_argument("suite counts must be non-negative");
    }
    if (!(family.mem_lo >= 0.0 && family.mem_lo <= family.mem_hi && family.mem_hi <= 1.0) ||
        !(family.parallel_lo >= 0.0 && family.parallel_lo <= family.parallel_hi &&
          family.parallel_hi <= 1.0) ||
        !(family.little_affinity_lo >= 0.0 && family.little_affinity_lo <= family.little_affinity_hi &&
          family.little_affinity_hi <= 1.0)) {
        throw std::invalid_argument("workload family '" + family.name + "' has invalid ranges");
    }
    if (!(options.jitter >= 0.0) || !(options.instructions > 0.0)) {
        throw std::invalid_argument("suite jitter must be >= 0 and instructions > 0");
    }
    Rng rng(mix_seed(options.seed, 0x5017e));
    const int nc = soc.cluster_count();
    Suite suite;
    suite.family = family.name;
    for (int app = 0; app < options.applications; ++app) {
        const double mu = rng.uniform(family.mem_lo, family.mem_hi);
        const double p = rng.uniform(family.parallel_lo, family.parallel_hi);
        const double little = nc > 1 ? rng.uniform(family.little_affinity_lo, family.little_affinity_hi) : 1.0;
        suite.application_starts.push_back(static_cast<int>(suite.snippets.size()));
        for (int k = 0; k < options.snippets_per_application; ++k) {
            const double j = options.jitter;
            SnippetSpec s;
            s.instruction_count = options.instructions * rng.uniform(0.9, 1.1);
            s.mem_intensity = std::clamp(mu + rng.uniform(-j, j), 0.0, 1.0);
            s.parallel_fraction = std::clamp(p + rng.uniform(-j, j), 0.0, 1.0);
            s.cluster_affinity.assign(nc, 0.0);
            if (nc == 1) {
                s.cluster_affinity[0] = 1.0;
            }
            else {
                const double a0 = std::clamp(little + rng.uniform(-j, j), 0.0, 1.0);
                s.cluster_affinity[0] = a0;
                // Middle clusters (if any) share the remainder evenly with the big one.
                for (int c = 1; c < nc; ++c) {
                    s.cluster_affinity[c] = (1.0 - a0) / (nc - 1);
                }
            }
            s.seed = rng.next();
            suite.snippets.push_back(std::move(s));
        }
    }
    return suite;
}

std::string suite_to_csv(const SocDescriptor &soc, const std::vector<SnippetSpec> &snippets)
{
    std::ostringstream os;
    os << "snippet_id,instructions,mem_intensity,parallel_fraction";
    for (const auto &cl : soc.clusters) {
        os << ",affinity_" << cl.name;
    }
    os << ",seed\n";
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        const auto &s = snippets[i];
        os << i << ',' << format_double(s.instruction_count) << ',' << format_double(s.mem_intensity)
           << ',' << format_double(s.parallel_fraction);
        for (double a : s.cluster_affinity) {
            os << ',' << format_double(a);
        }
        os << ',' << s.seed << '\n';
    }
    return os.str();
}

std::vector<SnippetSpec> suite_from_csv(const SocDescriptor &soc, const std::string &text)
{
    const CsvTable csv = parse_csv(text);
    const int c_instr = csv.column("instructions");
    const int c_mem = csv.column("mem_intensity");
    const int c_par = csv.column("parallel_fraction");
    const int c_seed = csv.column("seed");
    std::vector<int> c_aff;
    for (const auto &cl : soc.clusters) {
        c_aff.push_back(csv.column("affinity_" + cl.name));
    }
    std::vector<SnippetSpec> out;
    for (const auto &row : csv.rows) {
        SnippetSpec s;
        s.instruction_count = parse_double(row[c_instr], "instructions");
        s.mem_intensity = parse_double(row[c_mem], "mem_intensity");
        s.parallel_fraction = parse_double(row[c_par], "parallel_fraction");
        for (int c : c_aff) {
            s.cluster_affinity.push_back(parse_double(row[c], "affinity"));
        }
        s.seed = static_cast<std::uint64_t>(std::stoull(row[c_seed]));
        try {
            validate(soc, s);
        }
        catch (const std::invalid_argument &ex) {
            throw IoError(std::string("snippet trace row is invalid: ") + ex.what());
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace socrm
