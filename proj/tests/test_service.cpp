#include "flexpoly/service.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <future>
#include <sys/wait.h>
#include <unistd.h>

using namespace flexpoly;
namespace fs = std::filesystem;

namespace {

template <class F>
int status_of(F&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return api::http_status(e);
  }
  return 200;
}

json built(const std::string& name) { return api::build({{"model", name}}); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

struct Scratch {
  fs::path dir = fs::temp_directory_path() / ("flexpoly-test-" + std::to_string(::getpid()));
  Scratch() { fs::create_directories(dir); }
  ~Scratch() { fs::remove_all(dir); }
  fs::path operator/(const std::string& name) const { return dir / name; }
};

struct Run {
  int code = -1;
  std::string out, err;
};

// Runs the command-line tool with stdout and stderr captured.
Run cli(const Scratch& s, const std::string& args) {
  const auto out = s / "stdout.txt", err = s / "stderr.txt";
  const std::string cmd = std::string("\"") + FLEXPOLY_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

class Http : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    service_ = new Service();
    service_->bind(0);
    service_->start();
  }
  static void TearDownTestSuite() {
    delete service_;
    service_ = nullptr;
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", service_->port());
    c.set_read_timeout(60, 0);
    return c;
  }

  httplib::Result post(const std::string& path, const json& body) const {
    return client().Post(path, body.dump(), "application/json");
  }

  // Polls a job until it leaves the queue; returns the final status document.
  json poll(const std::string& id) const {
    for (int k = 0; k < 6000; ++k) {
      auto r = client().Get("/jobs/" + id);
      if (!r || r->status != 200) return {};
      const auto j = json::parse(r->body);
      if (j["status"] == "done" || j["status"] == "failed") return j;
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    return {};
  }

  static Service* service_;
};

Service* Http::service_ = nullptr;

}  // namespace

// ---------------------------------------------------------------------------
// Shared request layer

TEST(Api, ErrorKindsMapToStatusAndExitCodes) {
  const NotFoundError nf("x");
  const ValidationError va("x");
  const SolverError so("x");
  const DegenerateError de("x");
  EXPECT_EQ(api::http_status(nf), 404);
  EXPECT_EQ(api::http_status(va), 400);
  EXPECT_EQ(api::http_status(so), 422);
  EXPECT_EQ(api::exit_code(va), 2);
  EXPECT_EQ(api::exit_code(so), 3);
  EXPECT_EQ(api::exit_code(nf), 2);
  EXPECT_EQ(api::exit_code(de), 2);
  const std::runtime_error other("x");
  EXPECT_EQ(api::exit_code(other), 1);
  EXPECT_EQ(api::http_status(other), 500);
  const auto p = api::error_payload(so);
  EXPECT_EQ(p["error"]["kind"], "solver");
  EXPECT_EQ(p["error"]["status"], 422);
  EXPECT_EQ(p["error"]["message"], "x");
  EXPECT_NE(api::http_status(de), 200);
}

TEST(Api, ModelsListTheCatalog) {
  const auto m = api::models()["models"];
  EXPECT_EQ(m.size(), catalog_models().size());
  bool found = false;
  for (const auto& e : m) {
    if (e["name"] == "bricard1") {
      found = true;
      EXPECT_EQ(e["kind"], "twin");
      EXPECT_FALSE(e["params"].empty());
    }
  }
  EXPECT_TRUE(found);
}

TEST(Api, BuildRoundTripsThroughTheModelDocument) {
  const auto doc = built("bricard1");
  EXPECT_EQ(doc["kind"], "twin");
  EXPECT_EQ(doc["model"], "bricard1");
  const auto back = model_from_json(doc);
  ASSERT_TRUE(std::holds_alternative<Twin>(back));
  const auto orig = std::get<Twin>(catalog("bricard1"));
  EXPECT_EQ(std::get<Twin>(back).mesh.vertices(), orig.mesh.vertices());
  EXPECT_EQ(std::get<Twin>(back).partner, orig.partner);
}

TEST(Api, BuildErrors) {
  EXPECT_EQ(status_of([] { api::build({{"model", "nope"}}); }), 404);
  EXPECT_EQ(status_of([] { api::build({{"model", "bricard1"}, {"params", {{"c_y", -4.0}}}}); }), 400);
  EXPECT_EQ(status_of([] { api::build({{"model", "bricard1"}, {"params", {{"zz", 1.0}}}}); }), 400);
  EXPECT_EQ(status_of([] { api::build(json::array()); }), 400);
  EXPECT_EQ(status_of([] { api::parse_json("{not json"); }), 400);
}

TEST(Api, DriverStrings) {
  const auto m = std::get<Twin>(catalog("bricard1")).mesh;
  const int a = *m.find_label("A"), ap = *m.find_label("A'"), b = *m.find_label("B"), c = *m.find_label("C");
  for (const char* s : {"A,A'", "A-A'", "AA'", "distance:A,A'", " A , A' "}) {
    const auto d = api::detail::parse_driver_string(m, s);
    const auto& p = std::get<DistanceDriver>(d);
    EXPECT_EQ(Edge(p.i, p.j), Edge(a, ap)) << s;
  }
  const auto byindex = std::get<DistanceDriver>(api::detail::parse_driver_string(m, std::to_string(a) + "," + std::to_string(ap)));
  EXPECT_EQ(Edge(byindex.i, byindex.j), Edge(a, ap));
  const auto q = std::get<DihedralDriver>(api::detail::parse_driver_string(m, "dihedral:B,A,C,A'"));
  EXPECT_EQ(q.a, b);
  EXPECT_EQ(q.c, c);
  EXPECT_THROW(api::detail::parse_driver_string(m, "A,Q"), ValidationError);
  EXPECT_THROW(api::detail::parse_driver_string(m, "dihedral:A,B"), ValidationError);
  EXPECT_THROW(api::detail::parse_driver(m, json("A,A")), ValidationError);
}

TEST(Api, ParamsAndBoxes) {
  const auto p = api::parse_params({"a=1.5", " b = -2 "});
  EXPECT_EQ(p.at("a"), 1.5);
  EXPECT_EQ(p.at("b"), -2.0);
  EXPECT_THROW(api::parse_params({"a"}), ValidationError);
  EXPECT_THROW(api::parse_params({"a=x"}), ValidationError);
  const auto box = api::parse_box("c_x=-0.9:-0.5, c_z=0.1:0.3");
  EXPECT_EQ(box.at("c_x").lo, -0.9);
  EXPECT_EQ(box.at("c_z").hi, 0.3);
  EXPECT_THROW(api::parse_box("c_x=1"), ValidationError);
  EXPECT_THROW(api::parse_box(""), ValidationError);
}

TEST(Api, FlexRequests) {
  const auto doc = built("bricard1");
  const auto path = api::flex({{"mesh", doc}, {"frames", 7}});
  EXPECT_EQ(path["frames"].size(), 7u);
  EXPECT_EQ(path["status"], "complete");
  EXPECT_TRUE(path.contains("mesh"));
  const auto ranged = api::flex({{"mesh", doc}, {"driver", "A,A'"}, {"range", "1.5:1.6"}, {"frames", 3}});
  EXPECT_NEAR(ranged["frames"][0]["t"].get<double>(), 1.5, 1e-15);
  EXPECT_NEAR(ranged["frames"][2]["t"].get<double>(), 1.6, 1e-15);
  // a rigid body cannot be driven
  EXPECT_EQ(status_of([] { api::flex({{"mesh", mesh_to_json(cube())}, {"driver", "0,6"}}); }), 422);
  // one driver on a two-parameter crinkle is not enough
  const auto pent = built("pentagonal_crinkle");
  EXPECT_EQ(status_of([&] { api::flex({{"mesh", pent}, {"driver", "C1,A1"}}); }), 400);
  EXPECT_EQ(status_of([&] { api::flex({{"mesh", pent}, {"driver", "C2,A1"}, {"pinned", {"C1,A1"}}, {"frames", 5}}); }), 200);
  EXPECT_EQ(status_of([&] { api::flex({{"mesh", doc}, {"frames", 0}}); }), 400);
  EXPECT_EQ(status_of([&] { api::flex({{"mesh", doc}, {"range", "1.5"}}); }), 400);
  EXPECT_EQ(status_of([&] { api::flex({{"frames", 3}}); }), 400);
}

TEST(Api, CheckMeshesAndPaths) {
  const auto cube_report = api::check({{"mesh", mesh_to_json(cube())}});
  EXPECT_EQ(cube_report["embedded"], true);
  EXPECT_EQ(cube_report["flexible"], false);
  EXPECT_EQ(cube_report["stats"]["euler"], 2);
  const auto twin = api::check({{"mesh", built("bricard1")}});
  EXPECT_EQ(twin["flexible"], true);
  EXPECT_EQ(twin["embedded"], false);
  EXPECT_LT(twin["sym_residual"].get<double>(), 1e-12);
  const auto path = api::flex({{"mesh", built("bricard1")}, {"frames", 5}});
  const auto rep = api::check({{"path", path}, {"frame", 2}});
  EXPECT_EQ(rep["frame"], 2);
  EXPECT_EQ(rep["path"]["frames"], 5);
  EXPECT_EQ(rep["path"]["embedded_frames"], 0);
  EXPECT_LT(rep["path"]["max_edge_err"].get<double>(), 1e-8);
  EXPECT_EQ(status_of([&] { api::check({{"path", path}, {"frame", 5}}); }), 400);
}

TEST(Api, NetRequests) {
  const auto svg = api::net({{"mesh", built("new_crinkle")}});
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_EQ(status_of([] { api::net({{"mesh", mesh_to_json(cube())}, {"scale", -1}}); }), 400);
  EXPECT_EQ(status_of([] { api::net({{"mesh", mesh_to_json(cube())}, {"root", 99}}); }), 400);
}

TEST(Api, PortComesFromTheEnvironment) {
  ::unsetenv(kPortEnvVar);
  EXPECT_EQ(port_from_env(), kDefaultPort);
  ::setenv(kPortEnvVar, "9123", 1);
  EXPECT_EQ(port_from_env(), 9123);
  ::setenv(kPortEnvVar, "90000", 1);
  EXPECT_THROW(port_from_env(), ValidationError);
  ::setenv(kPortEnvVar, "12ab", 1);
  EXPECT_THROW(port_from_env(), ValidationError);
  ::unsetenv(kPortEnvVar);
}

TEST(Jobs, RunInTheBackground) {
  JobStore store;
  std::promise<void> gate;
  auto opened = gate.get_future().share();
  const auto id = store.submit("test", [opened] {
    opened.wait();
    return json{{"ok", true}};
  });
  const auto before = store.get(id);
  ASSERT_TRUE(before);
  EXPECT_NE(before->state, JobState::Done);
  gate.set_value();
  const auto after = store.wait(id);
  EXPECT_EQ(after.state, JobState::Done);
  EXPECT_EQ(after.result, "{\"ok\":true}\n");
  const auto bad = store.wait(store.submit("test", []() -> json { throw SolverError("stuck"); }));
  EXPECT_EQ(bad.state, JobState::Failed);
  EXPECT_EQ(bad.error_status, 422);
  EXPECT_FALSE(store.get("job-99"));
}

// ---------------------------------------------------------------------------
// HTTP

TEST_F(Http, ModelsAndCors) {
  auto r = client().Get("/models");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->body, api::serialize(api::models()));
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "*");
  auto o = client().Options("/flex");
  ASSERT_TRUE(o);
  EXPECT_EQ(o->status, 204);
}

TEST_F(Http, SynchronousEndpoints) {
  auto b = post("/build", {{"model", "bricard1"}});
  ASSERT_TRUE(b);
  EXPECT_EQ(b->status, 200);
  EXPECT_EQ(b->body, api::serialize(built("bricard1")));
  auto c = post("/check", {{"mesh", json::parse(b->body)}});
  ASSERT_TRUE(c);
  EXPECT_EQ(c->status, 200);
  EXPECT_EQ(json::parse(c->body)["flexible"], true);
  auto n = post("/net", {{"mesh", json::parse(b->body)}});
  ASSERT_TRUE(n);
  EXPECT_EQ(n->status, 200);
  EXPECT_EQ(n->get_header_value("Content-Type"), "image/svg+xml");
}

TEST_F(Http, ErrorsCarryStatusAndPayload) {
  auto nf = post("/build", {{"model", "nope"}});
  ASSERT_TRUE(nf);
  EXPECT_EQ(nf->status, 404);
  EXPECT_EQ(json::parse(nf->body)["error"]["kind"], "not_found");
  auto bad = client().Post("/build", "{oops", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto under = post("/flex", {{"mesh", built("pentagonal_crinkle")}, {"driver", "C1,A1"}});
  ASSERT_TRUE(under);
  EXPECT_EQ(under->status, 400);
  auto unknown = client().Get("/jobs/job-424242");
  ASSERT_TRUE(unknown);
  EXPECT_EQ(unknown->status, 404);
  auto search = post("/search", {{"model", "nope"}});
  ASSERT_TRUE(search);
  EXPECT_EQ(search->status, 404);
}

TEST_F(Http, FlexJobDeliversOneHundredFrames) {
  auto r = post("/flex", {{"mesh", built("bricard1")}});
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 202);
  const auto id = json::parse(r->body)["id"].get<std::string>();
  const auto st = poll(id);
  ASSERT_EQ(st.value("status", ""), "done");
  auto f = client().Get("/jobs/" + id + "/frames");
  ASSERT_TRUE(f);
  EXPECT_EQ(f->status, 200);
  const auto doc = json::parse(f->body);
  EXPECT_EQ(doc["frames"].size(), 100u);
  for (const auto& fr : doc["frames"]) EXPECT_LT(fr["diag"]["edge_err"].get<double>(), 1e-8);
  EXPECT_EQ(f->body, api::serialize(api::flex({{"mesh", built("bricard1")}})));
}

TEST_F(Http, FailedJobReportsItsError) {
  auto r = post("/flex", {{"mesh", mesh_to_json(cube())}, {"driver", "0,6"}});
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 202);
  const auto id = json::parse(r->body)["id"].get<std::string>();
  const auto st = poll(id);
  EXPECT_EQ(st.value("status", ""), "failed");
  EXPECT_EQ(st["error"]["kind"], "solver");
  auto f = client().Get("/jobs/" + id + "/frames");
  ASSERT_TRUE(f);
  EXPECT_EQ(f->status, 422);
}

TEST_F(Http, PendingResultIsAConflict) {
  std::promise<void> gate;
  auto opened = gate.get_future().share();
  const auto id = service_->jobs().submit("flex", [opened] {
    opened.wait();
    return json::object();
  });
  auto r = client().Get("/jobs/" + id + "/result");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 409);
  gate.set_value();
  EXPECT_EQ(poll(id).value("status", ""), "done");
  auto done = client().Get("/jobs/" + id + "/result");
  ASSERT_TRUE(done);
  EXPECT_EQ(done->status, 200);
  EXPECT_EQ(done->body, "{}\n");
}

TEST_F(Http, SearchJob) {
  const json req{{"model", "bricard1"}, {"box", "c_x=-0.9:-0.5"}, {"budget", 2}, {"frames", 8}, {"seed", 5}};
  auto r = post("/search", req);
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 202);
  const auto id = json::parse(r->body)["id"].get<std::string>();
  ASSERT_EQ(poll(id).value("status", ""), "done");
  auto res = client().Get("/jobs/" + id + "/result");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->body, api::serialize(api::search(req)));
}

// ---------------------------------------------------------------------------
// Command line, compared byte for byte with the service

TEST_F(Http, CommandLineMatchesTheService) {
  Scratch s;
  const auto model = s / "bricard1.json";
  const auto b = cli(s, "build bricard1 -o \"" + model.string() + "\"");
  ASSERT_EQ(b.code, 0) << b.err;
  auto hb = post("/build", {{"model", "bricard1"}});
  ASSERT_TRUE(hb);
  EXPECT_EQ(slurp(model), hb->body);

  const auto path = s / "path.json";
  const auto f = cli(s, "flex \"" + model.string() + "\" -o \"" + path.string() + "\"");
  ASSERT_EQ(f.code, 0) << f.err;
  auto hf = post("/flex", {{"mesh", json::parse(hb->body)}});
  ASSERT_TRUE(hf);
  const auto id = json::parse(hf->body)["id"].get<std::string>();
  ASSERT_EQ(poll(id).value("status", ""), "done");
  auto frames = client().Get("/jobs/" + id + "/frames");
  ASSERT_TRUE(frames);
  EXPECT_EQ(slurp(path), frames->body);

  const auto c = cli(s, "check \"" + path.string() + "\" --frame 3");
  ASSERT_EQ(c.code, 0) << c.err;
  auto hc = post("/check", {{"path", json::parse(frames->body)}, {"frame", 3}});
  ASSERT_TRUE(hc);
  EXPECT_EQ(c.out, hc->body);

  const auto n = cli(s, "net \"" + model.string() + "\"");
  ASSERT_EQ(n.code, 0) << n.err;
  auto hn = post("/net", {{"mesh", json::parse(hb->body)}});
  ASSERT_TRUE(hn);
  EXPECT_EQ(n.out, hn->body);

  const auto m = cli(s, "models");
  EXPECT_EQ(m.out, api::serialize(api::models()));
}

TEST(Cli, ExitCodes) {
  Scratch s;
  EXPECT_EQ(cli(s, "build nope").code, 2);
  EXPECT_EQ(cli(s, "build bricard1 --param c_y=-9").code, 2);
  EXPECT_EQ(cli(s, "flex /no/such/file.json").code, 2);
  EXPECT_EQ(cli(s, "frobnicate").code, 2);
  spit(s / "cube.json", mesh_to_json(cube()).dump());
  const auto rigid = cli(s, "--json flex \"" + (s / "cube.json").string() + "\" --driver 0,6");
  EXPECT_EQ(rigid.code, 3);
  const auto err = json::parse(rigid.err);
  EXPECT_EQ(err["error"]["kind"], "solver");
  EXPECT_EQ(err["error"]["status"], 422);
  const auto plain = cli(s, "build bricard1 --param zz=1");
  EXPECT_EQ(plain.code, 2);
  EXPECT_EQ(plain.err.rfind("error: ", 0), 0u);
}

TEST(Cli, ReadsObjFiles) {
  Scratch s;
  std::ostringstream os;
  write_obj(os, cube());
  spit(s / "cube.obj", os.str());
  const auto r = cli(s, "check \"" + (s / "cube.obj").string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["embedded"], true);
}
