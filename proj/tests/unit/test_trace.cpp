#include <doctest.h>

#include <sstream>

#include "fasim/fa_sim.hpp"
#include "fasim/ref_sim.hpp"
#include "fasim/trace.hpp"
#include "test_util.hpp"

using namespace fasim;

namespace {

void check_round_trip(const Trace& t) {
  std::stringstream ss;
  write_csv(ss, t);
  const Trace back = read_csv(ss);
  CHECK(back.variables == t.variables);
  REQUIRE(back.samples.size() == t.samples.size());
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    CHECK(back.samples[i].time == t.samples[i].time);
    CHECK(back.samples[i].location == t.samples[i].location);
    CHECK(back.samples[i].kind == t.samples[i].kind);
    CHECK(back.samples[i].values == t.samples[i].values);
  }
}

}  // namespace

TEST_SUITE("trace csv") {
  TEST_CASE("header and rows") {
    Trace t;
    t.variables = {"x", "y"};
    t.samples.push_back(TraceSample{0.0, "L1", StepKind::Init, {1.5, -0.25}, {}});
    t.samples.push_back(TraceSample{0.1, "L1", StepKind::Intra, {1.0 / 3.0, 2.0}, {}});
    std::stringstream ss;
    write_csv(ss, t);
    std::string header, row;
    std::getline(ss, header);
    std::getline(ss, row);
    CHECK(header == "time,location,step_kind,x,y");
    CHECK(row == "0,L1,init,1.5,-0.25");
  }

  TEST_CASE("FA and reference traces round-trip bit-exactly") {
    for (const auto& name : builtin_model_names()) {
      const auto m = test::builtin(name);
      SimConfig cfg;
      cfg.t_max = m.t_max;
      check_round_trip(simulate(convert_to_fa(m.ha), cfg).trace);
      RefConfig rc;
      rc.t_max = m.t_max;
      rc.dt = 0.01;
      check_round_trip(simulate_reference(m.ha, rc).trace);
    }
  }

  TEST_CASE("malformed CSV") {
    auto code_line = [](const std::string& text) {
      std::istringstream in(text);
      try {
        read_csv(in);
      } catch (const ModelError& e) {
        CHECK(e.code() == ErrorCode::ParseError);
        return e.line();
      }
      FAIL("accepted");
      return 0;
    };
    CHECK(code_line("") == 1);
    CHECK(code_line("t,loc\n") == 1);
    CHECK(code_line("time,location,step_kind,x\n0,A,init,1\n0.5,A,intra,abc\n") == 3);
    CHECK(code_line("time,location,step_kind,x\n0,A,init\n") == 2);
    CHECK(code_line("time,location,step_kind,x\n0,A,jump,1\n") == 2);
  }

  TEST_CASE("enum names") {
    CHECK(std::string(to_string(StepKind::Switch)) == "switch");
    CHECK(std::string(to_string(Termination::Halted)) == "halted");
  }
}
