// Command line front end: phantom synthesis, projection, noise, template
// based reconstruction, FBP baseline, SSIM scoring, and PGM export.
// Exit codes: 0 success, 2 usage or file format error, 3 numerical failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tbir/tbir.hpp"

namespace {

struct ReconstructArgs {
    std::string template_path, data_path, out_dir = ".";
    std::string pde = "transport", distance = "ssd", reg = "curvature";
    double gamma_s = -1.0;  // negative: pick the default for the reg kind
    double gamma_t = 1e2;
    double gamma_0 = 1e-6;
    int k_min = -1, k_max = -1;
    int nt = 5, mt = 1;
    int max_iters = 20;
};

double default_gamma_s(tbir::RegKind kind) {
    switch (kind) {
        case tbir::RegKind::third_order: return 1e-3;
        case tbir::RegKind::curvature: return 1e0;
        case tbir::RegKind::diffusion: return 1e3;
    }
    return 1e0;
}

int run_reconstruct(const ReconstructArgs& a) {
    namespace fs = std::filesystem;
    tbir::ScalarField f0 = tbir::read_field(a.template_path);
    tbir::Sinogram data = tbir::read_sinogram(a.data_path);

    int k_max = a.k_max > 0 ? a.k_max : tbir::level_for_grid(f0.grid);
    int k_min = a.k_min > 0 ? a.k_min : std::max(3, k_max - 2);
    if (f0.grid.m != (1 << k_max))
        throw std::invalid_argument("template resolution does not match level " +
                                    std::to_string(k_max));
    if (data.geom.bins != tbir::bins_for_level(k_max))
        throw std::invalid_argument("sinogram has " + std::to_string(data.geom.bins) +
                                    " bins, expected " +
                                    std::to_string(tbir::bins_for_level(k_max)) + " at level " +
                                    std::to_string(k_max));

    tbir::RegConfig reg;
    reg.kind = tbir::parse_reg_kind(a.reg);
    reg.gamma_s = a.gamma_s > 0.0 ? a.gamma_s : default_gamma_s(reg.kind);
    reg.gamma_t = a.gamma_t;
    reg.gamma_0 = a.gamma_0;
    tbir::OptimizerConfig cfg;
    cfg.max_gn_iters = a.max_iters;

    auto start = std::chrono::steady_clock::now();
    tbir::ReconstructResult res = tbir::multilevel_reconstruct(
        f0, data, tbir::parse_pde(a.pde), tbir::parse_distance(a.distance), reg, cfg, k_min,
        k_max, a.mt, a.nt);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    fs::create_directories(a.out_dir);
    tbir::write_field((fs::path(a.out_dir) / "recon.tbir").string(), res.recon);
    tbir::write_velocity((fs::path(a.out_dir) / "velocity.tbir").string(), res.v);

    std::ofstream log(fs::path(a.out_dir) / "log.txt");
    for (const tbir::ObjectiveReport& rep : res.reports)
        for (const tbir::IterationRecord& it : rep.iterations) {
            char line[256];
            std::snprintf(line, sizeof(line),
                          "level=%d iter=%d J=%.12e D=%.12e R=%.12e grad=%.12e mu=%g pcg=%d ls=%d",
                          rep.level, it.iter, it.obj, it.data, it.reg, it.grad_norm, it.mu,
                          it.pcg_iters, it.ls_trials);
            log << line << "\n";
            std::cout << line << "\n";
        }

    const tbir::ObjectiveReport& last = res.reports.back();
    std::ofstream summary(fs::path(a.out_dir) / "summary.txt");
    char buf[128];
    auto kv = [&](const std::string& k, const std::string& v) { summary << k << "=" << v << "\n"; };
    auto kvf = [&](const std::string& k, double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        kv(k, buf);
    };
    kv("pde", a.pde);
    kv("distance", a.distance);
    kv("reg", a.reg);
    kvf("gamma_s", reg.gamma_s);
    kvf("gamma_t", reg.gamma_t);
    kvf("gamma_0", reg.gamma_0);
    kv("k_min", std::to_string(k_min));
    kv("k_max", std::to_string(k_max));
    kv("n_t", std::to_string(a.nt));
    kv("m_t", std::to_string(a.mt));
    int total_iters = 0;
    bool ls_failed = false;
    for (const tbir::ObjectiveReport& rep : res.reports) {
        total_iters += static_cast<int>(rep.iterations.size()) - 1;
        ls_failed = ls_failed || rep.line_search_failed;
    }
    kv("iterations", std::to_string(total_iters));
    kvf("final_obj", last.final_obj);
    kvf("final_data", last.final_data);
    kvf("final_reg", last.final_reg);
    kv("stop_reason", last.stop_reason);
    kv("line_search_failed", ls_failed ? "1" : "0");
    kvf("wall_time_s", secs);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"template-based tomographic reconstruction"};
    app.require_subcommand(1);

    // phantom
    auto* sc_phantom = app.add_subcommand("phantom", "generate a template/target pair");
    std::string ph_kind = "disk_pair", ph_out = ".";
    int ph_m = 128, ph_n = 2;
    sc_phantom->add_option("--kind", ph_kind, "disk_pair | blob_warp | affine_warp");
    sc_phantom->add_option("--m", ph_m, "cells per axis (power of two)");
    sc_phantom->add_option("--n", ph_n, "dimension, 2 or 3");
    sc_phantom->add_option("--out", ph_out, "output directory");

    // forward
    auto* sc_forward = app.add_subcommand("forward", "project a field to a sinogram");
    std::string fw_in, fw_angles, fw_out = "sino.tbir";
    sc_forward->add_option("--in", fw_in, "input TBIR-F field")->required();
    sc_forward->add_option("--angles", fw_angles, "angle spec count@lo:hi")->required();
    sc_forward->add_option("--out", fw_out, "output TBIR-S path");

    // noise
    auto* sc_noise = app.add_subcommand("noise", "add Gaussian noise to a sinogram");
    std::string no_in, no_out = "noisy.tbir";
    double no_level = 0.05;
    std::uint64_t no_seed = 1;
    sc_noise->add_option("--in", no_in, "input TBIR-S sinogram")->required();
    sc_noise->add_option("--level", no_level, "noise level relative to mean(|g|)");
    sc_noise->add_option("--seed", no_seed, "RNG seed");
    sc_noise->add_option("--out", no_out, "output TBIR-S path");

    // reconstruct
    auto* sc_rec = app.add_subcommand("reconstruct", "template-based reconstruction");
    ReconstructArgs ra;
    sc_rec->add_option("--template", ra.template_path, "template TBIR-F")->required();
    sc_rec->add_option("--data", ra.data_path, "measured TBIR-S")->required();
    sc_rec->add_option("--pde", ra.pde, "transport | continuity");
    sc_rec->add_option("--distance", ra.distance, "ssd | ncc");
    sc_rec->add_option("--reg", ra.reg, "diffusion | curvature | third-order");
    sc_rec->add_option("--gamma-s", ra.gamma_s, "spatial weight (default by reg kind)");
    sc_rec->add_option("--gamma-t", ra.gamma_t, "temporal weight");
    sc_rec->add_option("--gamma-0", ra.gamma_0, "L2 weight");
    sc_rec->add_option("--kmin", ra.k_min, "coarsest level (default kmax-2, at least 3)");
    sc_rec->add_option("--kmax", ra.k_max, "finest level (default from template)");
    sc_rec->add_option("--nt", ra.nt, "RK4 steps");
    sc_rec->add_option("--mt", ra.mt, "velocity time cells");
    sc_rec->add_option("--max-iters", ra.max_iters, "Gauss-Newton iterations per level");
    sc_rec->add_option("--out", ra.out_dir, "output directory");

    // fbp
    auto* sc_fbp = app.add_subcommand("fbp", "filtered backprojection baseline");
    std::string fb_in, fb_out = "fbp.tbir";
    int fb_m = 0;
    sc_fbp->add_option("--data", fb_in, "input TBIR-S sinogram")->required();
    sc_fbp->add_option("--m", fb_m, "output resolution (default inferred from bins)");
    sc_fbp->add_option("--out", fb_out, "output TBIR-F path");

    // ssim
    auto* sc_ssim = app.add_subcommand("ssim", "structural similarity of two fields");
    std::string sa, sb;
    sc_ssim->add_option("a", sa, "first field")->required();
    sc_ssim->add_option("b", sb, "reference field")->required();

    // export-pgm
    auto* sc_pgm = app.add_subcommand("export-pgm", "write a field as 16-bit PGM");
    std::string pg_in, pg_out = "out.pgm";
    sc_pgm->add_option("--in", pg_in, "input TBIR-F field")->required();
    sc_pgm->add_option("--out", pg_out, "output PGM path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        namespace fs = std::filesystem;
        if (sc_phantom->parsed()) {
            auto [tpl, target] = tbir::make_phantom(tbir::parse_phantom_kind(ph_kind), ph_m, ph_n);
            fs::create_directories(ph_out);
            tbir::write_field((fs::path(ph_out) / "template.tbir").string(), tpl);
            tbir::write_field((fs::path(ph_out) / "target.tbir").string(), target);
        } else if (sc_forward->parsed()) {
            tbir::ScalarField f = tbir::read_field(fw_in);
            tbir::RadonGeometry geom = tbir::geometry_for_level(
                tbir::parse_angle_spec(fw_angles), tbir::level_for_grid(f.grid));
            tbir::write_sinogram(fw_out, tbir::radon_forward(f, geom));
        } else if (sc_noise->parsed()) {
            tbir::write_sinogram(no_out,
                                 tbir::add_noise(tbir::read_sinogram(no_in), no_level, no_seed));
        } else if (sc_rec->parsed()) {
            return run_reconstruct(ra);
        } else if (sc_fbp->parsed()) {
            tbir::Sinogram s = tbir::read_sinogram(fb_in);
            int m = fb_m;
            if (m == 0) {
                if (s.geom.bins % 3 != 0 || !tbir::is_power_of_two(s.geom.bins / 3))
                    throw std::invalid_argument(
                        "cannot infer resolution from bin count; pass --m");
                m = 2 * s.geom.bins / 3;
            }
            tbir::write_field(fb_out, tbir::fbp(s, tbir::make_grid(s.slices > 1 ? 3 : 2, m)));
        } else if (sc_ssim->parsed()) {
            double v = tbir::ssim(tbir::read_field(sa), tbir::read_field(sb));
            std::printf("%.6f\n", v);
        } else if (sc_pgm->parsed()) {
            tbir::export_pgm(pg_out, tbir::read_field(pg_in));
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
