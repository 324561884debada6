#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "socrm/simulator.hpp"
#include "socrm/soc.hpp"

namespace socrm {

/// Workload family: ranges the per-application parameters are drawn from.
struct WorkloadFamily {
    std::string name;
    double mem_lo = 0.0;
    double mem_hi = 0.0;
    double parallel_lo = 0.0;
    double parallel_hi = 0.0;
    double little_affinity_lo = 0.1;
    double little_affinity_hi = 0.4;
};

/// Compute-bound, highly parallel applications.
WorkloadFamily family_a();
/// Memory-bound, mostly serial applications.
WorkloadFamily family_b();
WorkloadFamily family_from_string(const std::string &name);

/// True when the memory-intensity ranges intersect (the split is then not a
/// clean train/test separation; reported as a warning).
bool families_overlap(const WorkloadFamily &a, const WorkloadFamily &b);

struct SuiteOptions {
    int applications = 5;
    int snippets_per_application = 400;
    /// Per-snippet jitter around the application's parameters (absolute).
    double jitter = 0.02;
    double instructions = 100e6;
    std::uint64_t seed = 1;
};

struct Suite {
    std::string family;
    std::vector<SnippetSpec> snippets;
    /// Index of the first snippet of each application.
    std::vector<int> application_starts;
};

/// Applications run back to back; each is a run of snippets with small
/// parameter jitter around values drawn from the family ranges. Zero counts
/// give an empty suite.
Suite generate_suite(const SocDescriptor &soc, const WorkloadFamily &family,
                     const SuiteOptions &options);

/// CSV: snippet_id,instructions,mem_intensity,parallel_fraction,affinity_<cluster>...,seed
std::string suite_to_csv(const SocDescriptor &soc, const std::vector<SnippetSpec> &snippets);
std::vector<SnippetSpec> suite_from_csv(const SocDescriptor &soc, const std::string &text);

}  // namespace socrm
