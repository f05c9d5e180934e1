#include "dft/cards.hpp"
#include "dft/integrity.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

namespace {

using dft::Execution;

// Printable noise with a card number every 64 KiB.
const std::string& corpus()
{
    static const std::string data = [] {
        std::mt19937_64 rng(42);
        std::string s(32u << 20, ' ');
        for (auto& c : s)
            c = static_cast<char>(' ' + rng() % 95);
        for (std::size_t off = 1000; off + 32 < s.size(); off += 64u << 10)
            s.replace(off, 18, " 4111111111111111 ");
        return s;
    }();
    return data;
}

const std::filesystem::path& image()
{
    static const std::filesystem::path p = [] {
        auto path = std::filesystem::temp_directory_path() / ("dft-bench-" + std::to_string(::getpid()) + ".img");
        std::ofstream(path, std::ios::binary).write(corpus().data(), static_cast<std::streamsize>(corpus().size()));
        return path;
    }();
    return p;
}

void card_scan(benchmark::State& state, Execution execution)
{
    const auto data = std::as_bytes(std::span(corpus().data(), corpus().size()));
    for (auto _ : state)
        benchmark::DoNotOptimize(dft::extract_card_numbers(data, "bench", execution));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * corpus().size()));
}

void manifest(benchmark::State& state, Execution execution)
{
    const auto handle = dft::open_evidence(image(), dft::SourceKind::raw_image);
    dft::ManifestOptions options;
    options.chunk_size = 4u << 20;
    options.execution = execution;
    for (auto _ : state)
        benchmark::DoNotOptimize(dft::compute_manifest(handle, options));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * corpus().size()));
}

} // namespace

BENCHMARK_CAPTURE(card_scan, serial, Execution::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(card_scan, parallel, Execution::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(manifest, serial, Execution::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(manifest, parallel, Execution::parallel)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv)
{
    benchmark::Initialize(&argc, argv);
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    std::filesystem::remove(image());
}
