#include "cmdim/harness.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace cmdim;

namespace {

Window parse_window_arg(const std::string& text, std::size_t dim) {
  try {
    return detail::yaml_window(YAML::Load(text), dim);
  } catch (const YAML::Exception& e) {
    throw experiment_error("window '" + text + "': " + e.what());
  }
}

Experiment load(const std::string& file, int resolution) {
  auto ex = load_experiment(file);
  if (resolution > 0) {
    if (ex.site_kind == "none") throw experiment_error("--resolution needs a continuous site");
    ex.site_size = resolution;
  }
  return ex;
}

void print_report(const RunReport& rep) {
  for (auto& r : rep.results) {
    std::cout << r.name << ": " << r.verdict << "\n";
    for (auto& s : r.stages) std::cout << "  [" << (s.pass ? "ok" : "FAIL") << "] " << s.stage << ": " << s.detail << "\n";
  }
}

void emit_trace(const ConvergenceTrace& t, const std::string& format) {
  if (format == "csv") {
    std::cout << t.csv();
  } else if (format == "svg") {
    std::cout << t.svg();
  } else {
    Json j;
    j["quantity"] = t.quantity;
    Json rows = Json::array();
    for (auto& r : t.rows)
      rows.push_back({{"window_size", r.window_size}, {"raw", r.raw}, {"normalized", r.normalized}, {"exact", r.exact}});
    j["rows"] = rows;
    j["best_upper"] = t.best_upper;
    j["running_max"] = t.running_max;
    j["fekete_violations"] = t.fekete_violations;
    std::cout << j.dump(2) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cmdim: finite-stage estimators for conditional mean dimension"};
  app.require_subcommand(1);
  int resolution = 0, threads = 1;
  std::size_t stages = 0;
  std::string format = "json";
  app.add_option("--resolution", resolution, "override the site grid resolution");
  app.add_option("--stages", stages, "use only the first N schedule windows");
  app.add_option("--threads", threads, "checks run concurrently")->check(CLI::PositiveNumber);
  app.add_option("--format", format, "trace output format")->check(CLI::IsMember({"csv", "json", "svg"}));

  std::string file, out_dir = "out", witness_path, quantity;
  auto* run = app.add_subcommand("run", "run the checks of an experiment and write artifacts");
  run->add_option("file", file)->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "artifact directory");

  auto* aud = app.add_subcommand("audit", "re-verify every witness in a witnesses.json");
  aud->add_option("witnesses", witness_path)->required()->check(CLI::ExistingFile);

  std::string A_text;
  std::vector<std::string> tile_texts;
  std::string eps_text = "1/4";
  std::size_t dim = 1;
  auto* tile = app.add_subcommand("tile", "greedy eps-quasi-tiling of a window");
  tile->add_option("window", A_text, "window, e.g. [0,8] or {box: 6}")->required();
  // one callback per occurrence, otherwise CLI11 splits "[0,4]" into two values
  tile->add_option_function<std::string>("--tile", [&](const std::string& s) { tile_texts.push_back(s); }, "tile shape (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->trigger_on_parse()
      ->required();
  tile->add_option("--eps", eps_text);
  tile->add_option("--dim", dim);

  auto* est = app.add_subcommand("estimate", "print a convergence trace for one quantity");
  est->add_option("quantity", quantity, "D | D_unconditional | N_eps | Wdim")
      ->required()
      ->check(CLI::IsMember({"D", "D_unconditional", "N_eps", "Wdim"}));
  est->add_option("file", file)->required()->check(CLI::ExistingFile);

  auto* ech = app.add_subcommand("echo", "print the canonical form of an experiment");
  ech->add_option("file", file)->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      auto ex = load(file, resolution);
      RunOptions opt;
      opt.stage_limit = stages;
      opt.threads = threads;
      auto rep = run_checks(ex, opt);
      write_artifacts(out_dir, ex, rep);
      print_report(rep);
      return rep.exit_code();
    }
    if (*aud) {
      std::ifstream in(witness_path);
      auto rep = audit_witnesses(Json::parse(in));
      for (auto& f : rep.failures) std::cout << "unverified: " << f << "\n";
      std::cout << rep.verified << "/" << rep.total << " witnesses verified\n";
      return rep.ok() ? 0 : 1;
    }
    if (*tile) {
      auto A = parse_window_arg(A_text, dim);
      std::vector<Window> shapes;
      for (auto& t : tile_texts) shapes.push_back(parse_window_arg(t, dim));
      auto g = greedy_quasi_tile(TileFamily(shapes, parse_rational(eps_text)), A);
      auto au = audit(g.tiling);
      Json j = tiling_json(g.tiling);
      j["uncovered"] = window_json(g.tiling.uncovered);
      j["audit"] = au.all();
      std::cout << j.dump(2) << "\n";
      return g.success && au.all() ? 0 : 1;
    }
    if (*est) {
      auto ex = load(file, resolution);
      RunOptions opt;
      opt.stage_limit = stages;
      Context cx(ex, opt);
      if (quantity == "D" || quantity == "D_unconditional") {
        std::vector<StageD> st;
        auto mode = quantity == "D" ? "conditional" : "unconditional";
        for (auto& F : cx.windows()) st.push_back(cx.D("main", "main", mode, F));
        emit_trace(trace_D(quantity, st), format);
      } else if (quantity == "N_eps") {
        FolnerSchedule sch;
        sch.windows = cx.windows();
        auto mt = stage_mdimM_conditional(*cx.sys(), ex.eps, sch);
        for (auto& t : mt.per_eps) emit_trace(t, format);
      } else {
        for (auto& e : ex.eps) {
          ConvergenceTrace t;
          t.quantity = "Wdim_eps=" + to_string(e);
          for (auto& F : cx.windows()) {
            WdimStage ws;
            try {
              ws = stage_Wdim_relative(*cx.sys(), e, F);
            } catch (const std::invalid_argument& err) {
              std::cerr << "eps=" << to_string(e) << " F=" << F.str() << ": " << err.what() << "\n";
              continue;
            }
            TraceRow r;
            r.window_size = F.size();
            r.raw = ws.exact ? std::to_string(ws.upper) : "[" + std::to_string(ws.lower) + "," + std::to_string(ws.upper) + "]";
            r.normalized = static_cast<double>(ws.upper) / static_cast<double>(F.size());
            r.exact = ws.exact;
            t.rows.push_back(r);
          }
          t.finish(false);
          emit_trace(t, format);
        }
      }
      return 0;
    }
    if (*ech) {
      std::cout << echo(load(file, resolution));
      return 0;
    }
  } catch (const experiment_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
