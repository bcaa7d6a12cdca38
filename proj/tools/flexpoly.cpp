// flexpoly: build, flex, check, unfold and search flexible polyhedra, or
// serve the same operations over HTTP.

#include "flexpoly/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

using namespace flexpoly;

namespace {

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") std::cout << text;
  else write_text_file(out, text);
}

json load_json(const std::string& path) { return api::parse_json(read_text_file(path)); }

/// Mesh files may be JSON documents or OBJ.
json load_mesh_doc(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".obj") {
    std::istringstream is(read_text_file(path));
    return mesh_to_json(read_obj(is));
  }
  return load_json(path);
}

Service* g_service = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flexpoly: flexible polyhedra by twinning"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json", json_errors, "print errors as structured JSON");

  auto* models = app.add_subcommand("models", "list catalog models and their parameters");

  std::string model, out;
  std::vector<std::string> params;
  auto* build = app.add_subcommand("build", "build a catalog model");
  build->add_option("model", model, "catalog model name")->required();
  build->add_option("--param", params, "parameter assignment name=value (repeatable)");
  build->add_option("-o,--output", out, "output file (default: stdout)");

  std::string mesh_path, driver = "auto", range = "auto";
  int frames = 100;
  int search_frames = SearchOptions{}.frames;
  std::vector<std::string> pinned;
  auto* flex = app.add_subcommand("flex", "trace a flex path");
  flex->add_option("mesh", mesh_path, "model or mesh file")->required()->check(CLI::ExistingFile);
  flex->add_option("--driver", driver, "driver: auto, A,A' or AA', dihedral:a,b,c,d");
  flex->add_option("--range", range, "a:b or auto");
  flex->add_option("--frames", frames, "number of frames")->check(CLI::Range(1, 100000));
  flex->add_option("--pin", pinned, "vertex pair held at its length (repeatable)");
  flex->add_option("-o,--output", out, "output file (default: stdout)");

  std::string input;
  int frame = -1, root = -1;
  auto* check = app.add_subcommand("check", "rigidity, intersection and volume report");
  check->add_option("input", input, "model, mesh or path file")->required()->check(CLI::ExistingFile);
  check->add_option("--frame", frame, "frame of a path file");
  check->add_option("-o,--output", out, "output file (default: stdout)");

  double scale = 40.0;
  auto* net = app.add_subcommand("net", "unfold into a printable SVG net");
  net->add_option("input", input, "model, mesh or path file")->required()->check(CLI::ExistingFile);
  net->add_option("--frame", frame, "frame of a path file");
  net->add_option("--root", root, "face to unfold from (default: largest)");
  net->add_option("--scale", scale, "millimetres per model unit");
  net->add_option("-o,--output", out, "output file (default: stdout)");

  std::string box;
  int budget = 16;
  std::uint64_t seed = 1;
  auto* search = app.add_subcommand("search", "sample a parameter box for embedded flex ranges");
  search->add_option("template", model, "catalog model name")->required();
  search->add_option("--box", box, "name=lo:hi,name=lo:hi")->required();
  search->add_option("--budget", budget, "number of samples")->check(CLI::Range(1, 100000));
  search->add_option("--seed", seed, "sampling seed");
  search->add_option("--frames", search_frames, "frames per traced sample")->check(CLI::Range(2, 100000));
  search->add_option("-o,--output", out, "output file (default: stdout)");

  int port = -1;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "run the local HTTP service");
  serve->add_option("--port", port, "port (default: $FLEXPOLY_PORT or 8765)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (json_errors && e.get_exit_code() != 0) {
      std::cerr << api::serialize({{"error", {{"kind", "validation"}, {"status", 400}, {"message", e.what()}}}});
      return 2;
    }
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*models) {
      emit(api::serialize(api::models()), "");
    } else if (*build) {
      json req{{"model", model}, {"params", api::parse_params(params)}};
      emit(api::serialize(api::build(req)), out);
    } else if (*flex) {
      json req{{"mesh", load_mesh_doc(mesh_path)}, {"driver", driver}, {"range", range}, {"frames", frames}};
      if (!pinned.empty()) req["pinned"] = pinned;
      emit(api::serialize(api::flex(req)), out);
    } else if (*check) {
      const json doc = load_mesh_doc(input);
      json req = doc.contains("frames") ? json{{"path", doc}} : json{{"mesh", doc}};
      if (frame >= 0) req["frame"] = frame;
      emit(api::serialize(api::check(req)), out);
    } else if (*net) {
      const json doc = load_mesh_doc(input);
      json req = doc.contains("frames") ? json{{"path", doc}} : json{{"mesh", doc}};
      if (frame >= 0) req["frame"] = frame;
      if (root >= 0) req["root"] = root;
      req["scale"] = scale;
      emit(api::net(req), out);
    } else if (*search) {
      json req{{"model", model}, {"box", box}, {"budget", budget}, {"seed", seed}, {"frames", search_frames}};
      emit(api::serialize(api::search(req)), out);
    } else if (*serve) {
      Service service(host);
      const int p = service.bind(port >= 0 ? port : port_from_env());
      g_service = &service;
      std::signal(SIGINT, [](int) { if (g_service) g_service->stop(); });
      std::signal(SIGTERM, [](int) { if (g_service) g_service->stop(); });
      std::cerr << "flexpoly serving on http://" << host << ":" << p << "\n";
      service.run();
      g_service = nullptr;
    }
  } catch (const std::exception& e) {
    if (json_errors) std::cerr << api::serialize(api::error_payload(e));
    else std::cerr << "error: " << e.what() << "\n";
    return api::exit_code(e);
  }
  return 0;
}
