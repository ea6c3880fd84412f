// Batch experiment runner: subcommands synthesize the flat config format and
// hand off to the library dispatcher, so flag runs and config-file runs are
// bit-identical for the same resolved settings.

#include <CLI11.hpp>
#include <iostream>
#include <sstream>

#include "csdet/experiment.hpp"

namespace {

struct Common {
    std::uint64_t seed = 1;
    std::string out = "out.csv";
    int threads = 1;
};

void add_common(CLI::App* cmd, Common* c) {
    cmd->add_option("--seed", c->seed, "RNG seed");
    cmd->add_option("--out", c->out, "output CSV path");
    cmd->add_option("--threads", c->threads, "worker threads (or env CSDET_THREADS)");
}

int dispatch(const std::string& text) {
    std::string diag;
    const int rc = csdet::run_experiment_text(text, {}, &diag);
    if (rc != 0) std::cerr << diag << "\n";
    return rc;
}

std::string header(const std::string& kind, const Common& c) {
    std::ostringstream os;
    os << "[experiment]\nkind = " << kind << "\nseed = " << c.seed << "\nout = " << c.out
       << "\nthreads = " << c.threads << "\n";
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"channel-shortening detector design and AIR estimation"};
    app.require_subcommand(1);

    // run <config>
    auto* run = app.add_subcommand("run", "run an experiment config file");
    std::string cfg_path;
    run->add_option("config", cfg_path, "config file")->required();
    Common run_c;
    std::uint64_t run_seed = 0;
    std::string run_out;
    int run_threads = 0;
    run->add_option("--seed", run_seed, "override seed");
    run->add_option("--out", run_out, "override output path");
    run->add_option("--threads", run_threads, "override thread count");

    // design-cs
    auto* dcs = app.add_subcommand("design-cs", "closed-form shortener design");
    Common dcs_c;
    std::string dcs_taps, dcs_shortener = "cs";
    double dcs_snr = 6.0;
    int dcs_l = 1;
    add_common(dcs, &dcs_c);
    dcs->add_option("--channel", dcs_taps, "channel taps file (re im per line)")->required();
    dcs->add_option("--L", dcs_l, "detector memory");
    dcs->add_option("--snr", dcs_snr, "Es/N0 in dB");
    dcs->add_option("--shortener", dcs_shortener, "cs|trunc|mmse-legacy");

    // air
    auto* air = app.add_subcommand("air", "Monte Carlo AIR curve");
    Common air_c;
    std::string air_taps, air_law = "cs", air_snr = "0:8:2", air_const = "bpsk";
    int air_l = 1;
    long air_n = 100000;
    int air_blocks = 10;
    add_common(air, &air_c);
    air->add_option("--channel", air_taps, "channel taps file")->required();
    air->add_option("--law", air_law, "exact|cs|trunc|mmse-legacy");
    air->add_option("--L", air_l, "detector memory");
    air->add_option("--snr", air_snr, "dB list or a:b:step");
    air->add_option("--constellation", air_const, "bpsk|qpsk|8psk|16apsk|32apsk");
    air->add_option("--n", air_n, "symbols per block");
    air->add_option("--blocks", air_blocks, "Monte Carlo blocks");

    // optimize-txfilter
    auto* txf = app.add_subcommand("optimize-txfilter", "transmit filter optimization");
    Common txf_c;
    std::string txf_taps;
    double txf_n0 = 0.9;
    int txf_l = 1, txf_ms = 3;
    add_common(txf, &txf_c);
    txf->add_option("--channel", txf_taps, "channel taps file")->required();
    txf->add_option("--L", txf_l, "detector memory");
    txf->add_option("--n0", txf_n0, "noise PSD (linear)");
    txf->add_option("--multistart", txf_ms, "optimizer restarts");

    // pack
    auto* pack = app.add_subcommand("pack", "time/frequency packing grid (config file)");
    std::string pack_cfg;
    pack->add_option("config", pack_cfg, "packing config file")->required();

    // satellite-sim
    auto* sat = app.add_subcommand("satellite-sim", "nonlinear satellite AIR");
    Common sat_c;
    std::string sat_mod = "8psk", sat_det = "cs", sat_psat = "10 14";
    double sat_ibo = 0.0;
    int sat_l = 2;
    long sat_n = 10000;
    add_common(sat, &sat_c);
    sat->add_option("--mod", sat_mod, "modulation");
    sat->add_option("--detector", sat_det, "cs|trunc");
    sat->add_option("--L", sat_l, "detector memory");
    sat->add_option("--ibo", sat_ibo, "input back-off [dB]");
    sat->add_option("--psat-n0", sat_psat, "Psat/N0 dB list");
    sat->add_option("--n", sat_n, "symbols per block");

    // szego-check
    auto* sz = app.add_subcommand("szego-check", "finite-N vs asymptotic log-det");
    Common sz_c;
    std::string sz_taps, sz_nlist = "64 256 1024";
    double sz_n0 = 1.0;
    add_common(sz, &sz_c);
    sz->add_option("--channel", sz_taps, "channel taps file")->required();
    sz->add_option("--n0", sz_n0, "noise PSD");
    sz->add_option("--n-list", sz_nlist, "matrix sizes");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        csdet::CliOverrides ov;
        if (run_seed) ov.seed = run_seed;
        if (!run_out.empty()) ov.out = run_out;
        if (run_threads) ov.threads = run_threads;
        std::string diag;
        const int rc = csdet::run_experiment_file(cfg_path, ov, &diag);
        if (rc != 0) std::cerr << diag << "\n";
        return rc;
    }
    if (dcs->parsed()) {
        std::ostringstream os;
        os << header("design-cs", dcs_c) << "[channel]\ntaps_file = " << dcs_taps
           << "\nsnr_db = " << dcs_snr << "\n[design]\nL = " << dcs_l
           << "\nshortener = " << dcs_shortener << "\n";
        return dispatch(os.str());
    }
    if (air->parsed()) {
        std::ostringstream os;
        os << header("air-curve", air_c) << "[channel]\ntaps_file = " << air_taps
           << "\n[air]\nlaw = " << air_law << "\nL = " << air_l << "\nsnr_db = " << air_snr
           << "\nconstellation = " << air_const << "\nn = " << air_n
           << "\nblocks = " << air_blocks << "\n";
        return dispatch(os.str());
    }
    if (txf->parsed()) {
        std::ostringstream os;
        os << header("txfilter-opt", txf_c) << "[channel]\ntaps_file = " << txf_taps
           << "\nn0 = " << txf_n0 << "\n[txfilter]\nL = " << txf_l
           << "\nmultistart = " << txf_ms << "\n";
        return dispatch(os.str());
    }
    if (pack->parsed()) {
        std::string diag;
        const int rc = csdet::run_experiment_file(pack_cfg, {}, &diag);
        if (rc != 0) std::cerr << diag << "\n";
        return rc;
    }
    if (sat->parsed()) {
        std::ostringstream os;
        os << header("satellite-sim", sat_c) << "[satellite]\nmod = " << sat_mod
           << "\ndetector = " << sat_det << "\nL = " << sat_l << "\nibo_db = " << sat_ibo
           << "\npsat_n0_db = " << sat_psat << "\nn = " << sat_n << "\n";
        return dispatch(os.str());
    }
    if (sz->parsed()) {
        std::ostringstream os;
        os << header("szego-check", sz_c) << "[szego]\ntaps_file = " << sz_taps
           << "\nn0 = " << sz_n0 << "\nn_list = " << sz_nlist << "\n";
        return dispatch(os.str());
    }
    return 0;
}
