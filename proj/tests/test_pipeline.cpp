#include <random>

#include "doctest.h"
#include "sonolab/operations.hpp"
#include "sonolab/ops.hpp"
#include "sonolab/sim.hpp"
#include "support.hpp"

using namespace sonolab;
using testing::max_abs;
using testing::max_abs_diff;

namespace {

struct Fixture {
  Probe probe;
  Scan scan;
  ParameterBag bag;
  RealTensor rf;
};

Fixture make_fixture(std::size_t n_frames = 1, std::size_t n_z = 30, std::size_t n_x = 20) {
  auto [probe, scan] = testing::small_setup(n_z, n_x);
  sim::Phantom phantom;
  phantom.scatterers = {{{0.0, 0.0, 0.02}, 1.0}, {{2e-3, 0.0, 0.015}, 0.5}};
  phantom.noise_std = 0.01;
  phantom.seed = 4;
  sim::Pulse pulse;
  const std::size_t n = sim::samples_for_grid(probe, scan, pulse);
  RealTensor rf = sim::simulate_rf(phantom, probe, scan, pulse, n, n_frames);
  ParameterBag bag = prepare_parameters(probe, scan);
  return {probe, scan, bag, std::move(rf)};
}

RealTensor as_real(const TensorFrame& f) { return std::get<RealTensor>(f); }

std::string message_of(auto&& fn, ErrorKind expected) {
  try {
    fn();
  } catch (const Error& e) {
    CHECK(e.kind() == expected);
    return e.what();
  }
  FAIL("expected an exception");
  return {};
}

OperationOptions keys(std::string in, std::string out) {
  OperationOptions o;
  o.input_key = std::move(in);
  o.output_key = std::move(out);
  return o;
}

}  // namespace

TEST_CASE("prepare_parameters derives the operation inputs") {
  auto [probe, scan] = testing::reference_setup();
  const ParameterBag bag = prepare_parameters(probe, scan);
  CHECK(bag.scalar("sound_speed") == 1540.0);
  CHECK(bag.scalar("sampling_frequency") == 20e6);
  CHECK(bag.scalar("demodulation_frequency") == 5e6);
  CHECK(bag.text("transmit_type") == "plane_wave");
  CHECK(bag.array("steering_angles") == scan.steering_angles);
  CHECK(bag.array("initial_times") == scan.initial_times);
  CHECK(bag.array("element_positions").size() == 64 * 3);
  CHECK(bag.scalar("f_number") == 1.0);
  CHECK(bag.pair("dynamic_range") == ParameterBag::Pair{-60.0, 0.0});
  const CartesianGrid g = make_cartesian_grid(scan);
  CHECK(bag.array("grid_x") == g.x);
  CHECK(bag.array("grid_z") == g.z);
  CHECK(bag.pair("xlims") == scan.xlims);
  CHECK(bag.pair("zlims") == scan.zlims);
}

TEST_CASE("a sound-speed override is used downstream") {
  Fixture fx = make_fixture();
  Pipeline demod({std::make_shared<Demodulate>()});
  const ComplexTensor iq = std::get<ComplexTensor>(demod(fx.rf, fx.bag));
  Pipeline tof({std::make_shared<TOFCorrection>()});
  const ParameterBag bag = merge_parameters(fx.bag, ParameterBag{{"sound_speed", 1450.0}});
  const ComplexTensor via_pipeline = std::get<ComplexTensor>(tof(iq, bag));

  ops::TofParams params;
  params.element_positions = fx.probe.element_positions;
  params.transmit = TransmitGeometry::from_scan(fx.scan);
  params.initial_times = fx.scan.initial_times;
  params.sound_speed = 1450.0;
  const ComplexTensor direct = ops::tof_correct(iq, ops::flatten_grid(make_cartesian_grid(fx.scan)), params);
  CHECK(via_pipeline == direct);
  params.sound_speed = 1540.0;
  CHECK(!(ops::tof_correct(iq, ops::flatten_grid(make_cartesian_grid(fx.scan)), params) == direct));
}

TEST_CASE("validation names the missing parameter and operation") {
  Fixture fx = make_fixture();
  ParameterBag bag = fx.bag;
  bag.erase("sound_speed");
  Pipeline p({std::make_shared<Demodulate>(), std::make_shared<TOFCorrection>(), std::make_shared<DelayAndSum>()});
  const std::string msg = message_of([&] { p.validate(bag); }, ErrorKind::parameter);
  CHECK(msg.find("sound_speed") != std::string::npos);
  CHECK(msg.find("TOFCorrection") != std::string::npos);
  // run never starts when validation fails
  message_of([&] { p(fx.rf, bag); }, ErrorKind::parameter);

  // Missing geometry depends on the transmit type.
  ParameterBag no_angles = fx.bag;
  no_angles.erase("steering_angles");
  CHECK(message_of([&] { p.validate(no_angles); }, ErrorKind::parameter).find("steering_angles") !=
        std::string::npos);

  Pipeline patched = default_bmode_pipeline(4);
  CHECK(message_of([&] { patched.validate(bag); }, ErrorKind::parameter).find("sound_speed") != std::string::npos);
}

TEST_CASE("a full bag yields a validated plan with bindings") {
  Fixture fx = make_fixture();
  OperationOptions statics;
  statics.params.set("f_number", 1.5);
  Pipeline p({std::make_shared<Demodulate>(), std::make_shared<TOFCorrection>(),
              std::make_shared<PfieldWeighting>(statics), std::make_shared<DelayAndSum>()});
  const ExecutionPlan plan = p.validate(fx.bag);
  CHECK(plan.validated);
  REQUIRE(plan.steps.size() == 4);
  CHECK(plan.steps[0].bindings.at("sampling_frequency") == "bag");
  CHECK(plan.steps[1].bindings.at("sampling_frequency") == "op:Demodulate");
  CHECK(plan.steps[1].bindings.at("sound_speed") == "bag");
  CHECK(plan.steps[1].bindings.at("steering_angles") == "bag");
  CHECK(plan.steps[2].bindings.at("f_number") == "static");
  CHECK(plan.output_key == kDefaultKey);

  const ExecutionPlan patched = default_bmode_pipeline(7).validate(fx.bag);
  REQUIRE(patched.steps.size() == 5);
  CHECK(patched.steps[1].operation == "PatchedGrid");
  CHECK(patched.steps[1].patch_boundaries.size() == 8);
  CHECK(patched.steps[1].patch_boundaries.back() == 30 * 20);
}

TEST_CASE("broken key chaining is reported with both keys") {
  Pipeline p({std::make_shared<EnvelopeDetect>(keys("data", "data")), std::make_shared<Normalize>(keys("data", "img")),
              std::make_shared<LogCompress>(keys("data", "data"))});
  const std::string msg = message_of([&] { p.validate(ParameterBag{{"dynamic_range", ParameterBag::Pair{-60, 0}}}); },
                                     ErrorKind::config);
  CHECK(msg.find("'img'") != std::string::npos);
  CHECK(msg.find("'data'") != std::string::npos);
}

TEST_CASE("identity pipeline and custom keys") {
  Pipeline empty({});
  TensorMap in;
  in.emplace("data", testing::random_tensor({Axis::pixel}, {5}, 1));
  in.emplace("other", testing::random_tensor({Axis::pixel}, {3}, 2));
  CHECK(empty.run(in, {}) == in);

  OperationOptions keep = keys("data", "env");
  keep.retain_input = true;
  Pipeline env({std::make_shared<EnvelopeDetect>(keep), std::make_shared<Normalize>(keys("env", "norm"))}, "data");
  const TensorMap out = env.run(in, {});
  CHECK(out.count("data") == 1);
  CHECK(out.count("env") == 0);
  CHECK(out.count("norm") == 1);
  CHECK(out.count("other") == 1);
  CHECK(env.output_key() == "norm");
}

TEST_CASE("repeated runs are bit-identical") {
  Fixture fx = make_fixture(2);
  const Pipeline p = default_bmode_pipeline(5);
  const TensorFrame a = p(fx.rf, fx.bag);
  const TensorFrame b = p(fx.rf, fx.bag);
  CHECK(a == b);
  {
    testing::ThreadCap one(1);
    CHECK(p(fx.rf, fx.bag) == a);
  }
  {
    testing::ThreadCap many(7);
    CHECK(p(fx.rf, fx.bag) == a);
  }
}

TEST_CASE("composition equals sequential application") {
  Fixture fx = make_fixture();
  auto front = std::vector<OperationPtr>{std::make_shared<Demodulate>(), std::make_shared<TOFCorrection>(),
                                         std::make_shared<PfieldWeighting>()};
  auto back = std::vector<OperationPtr>{std::make_shared<DelayAndSum>(), std::make_shared<EnvelopeDetect>(),
                                        std::make_shared<Normalize>(), std::make_shared<LogCompress>()};
  std::vector<OperationPtr> all = front;
  all.insert(all.end(), back.begin(), back.end());
  ParameterBag after_front = fx.bag;
  after_front.set("sampling_frequency", fx.bag.scalar("sampling_frequency"));
  const TensorFrame whole = Pipeline(all)(fx.rf, fx.bag);
  const TensorFrame split = Pipeline(back)(Pipeline(front)(fx.rf, fx.bag), after_front);
  CHECK(whole == split);
}

TEST_CASE("patch boundaries use ceil division and clamp") {
  CHECK(patch_boundaries(10, 3) == std::vector<std::size_t>{0, 4, 7, 10});
  CHECK(patch_boundaries(10, 1) == std::vector<std::size_t>{0, 10});
  CHECK(patch_boundaries(4, 9) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  for (std::size_t n = 1; n < 60; ++n) {
    for (std::size_t p = 1; p < 20; ++p) {
      const auto b = patch_boundaries(n, p);
      CHECK(b.front() == 0);
      CHECK(b.back() == n);
      CHECK(b.size() == std::min(n, p) + 1);
      for (std::size_t i = 1; i < b.size(); ++i) {
        CHECK(b[i] > b[i - 1]);
        CHECK(b[i] - b[i - 1] <= b[1] - b[0]);
      }
    }
  }
  CHECK_THROWS_AS(patch_boundaries(10, 0), Error);
}

TEST_CASE("patched execution matches unpatched execution") {
  Fixture fx = make_fixture(2, 23, 17);
  const RealTensor reference = as_real(unpatched_bmode_pipeline()(fx.rf, fx.bag));
  CHECK(reference.shape() == std::vector<std::size_t>{2, 23, 17});
  for (std::size_t patches : {1, 2, 7, 100, 391, 5000}) {
    const RealTensor patched = as_real(default_bmode_pipeline(patches)(fx.rf, fx.bag));
    CAPTURE(patches);
    REQUIRE(patched.shape() == reference.shape());
    CHECK(max_abs_diff(patched, reference) <= 1e-5 * max_abs(reference));
  }
}

TEST_CASE("validation soundness on random parameter removals") {
  Fixture fx = make_fixture();
  const Pipeline p = default_bmode_pipeline(3);
  const auto names = fx.bag.keys();
  std::mt19937_64 rng(21);
  int validated = 0;
  for (int trial = 0; trial < 60; ++trial) {
    ParameterBag bag = fx.bag;
    for (const auto& k : names) {
      if (rng() % 6 == 0) bag.erase(k);
    }
    bool ok = true;
    try {
      p.validate(bag);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::parameter);
      ok = false;
    }
    if (!ok) continue;
    ++validated;
    try {
      p(fx.rf, bag);
    } catch (const Error& e) {
      // Validation passed, so a missing parameter must not surface at run time.
      CHECK(std::string(e.what()).find("missing parameter") == std::string::npos);
      CHECK(e.kind() != ErrorKind::parameter);
    }
  }
  CHECK(validated > 0);
}

TEST_CASE("operation errors carry the operation name") {
  RealTensor zeros({Axis::frame, Axis::pixel}, {1, 4});
  Pipeline p({std::make_shared<Normalize>()});
  const std::string msg = message_of([&] { p(zeros, {}); }, ErrorKind::degenerate_input);
  CHECK(msg.find("Normalize") != std::string::npos);
}

TEST_CASE("static parameters override the flowing bag") {
  RealTensor x({Axis::pixel}, {3}, std::vector<double>{-80.0, -30.0, 0.0});
  OperationOptions o;
  o.params.set("dynamic_range", ParameterBag::Pair{-40.0, 0.0});
  Pipeline p({std::make_shared<ClipMapRange>(o)});
  const ParameterBag bag{{"dynamic_range", ParameterBag::Pair{-60.0, 0.0}},
                         {"normalization_range", ParameterBag::Pair{0.0, 1.0}}};
  const RealTensor out = as_real(p(x, bag));
  CHECK(out[0] == 0.0);
  CHECK(out[1] == doctest::Approx(0.25));
  CHECK(out[2] == 1.0);
}

TEST_CASE("demodulation decimation updates the downstream sampling frequency") {
  Fixture fx = make_fixture();
  auto chain = [](double decimation, bool pin_rate) {
    OperationOptions dec;
    dec.params.set("decimation", decimation);
    OperationOptions tof;
    if (pin_rate) tof.params.set("sampling_frequency", 20e6);
    return Pipeline({std::make_shared<Demodulate>(dec), std::make_shared<TOFCorrection>(tof),
                     std::make_shared<PfieldWeighting>(), std::make_shared<DelayAndSum>(),
                     std::make_shared<EnvelopeDetect>()});
  };
  const RealTensor full = as_real(chain(1.0, false)(fx.rf, fx.bag));
  const RealTensor halved = as_real(chain(2.0, false)(fx.rf, fx.bag));
  const RealTensor stale = as_real(chain(2.0, true)(fx.rf, fx.bag));
  CHECK(testing::argmax_zx(halved) == testing::argmax_zx(full));
  CHECK(testing::argmax_zx(stale) != testing::argmax_zx(full));
  CHECK(max_abs_diff(halved, full) < 0.1 * max_abs(full));
  // The caller's bag is untouched.
  CHECK(fx.bag.scalar("sampling_frequency") == 20e6);
}

TEST_CASE("pipeline config files") {
  const Pipeline p = parse_pipeline_config(R"({
    "operations": [
      {"name": "Demodulate"},
      {"name": "PatchedGrid", "num_patches": 7,
       "operations": [{"name": "TOFCorrection"}, {"name": "PfieldWeighting", "params": {"f_number": 1.5}},
                      {"name": "DelayAndSum"}]},
      {"name": "EnvelopeDetect"}, {"name": "Normalize"}, {"name": "LogCompress"}
    ]})");
  REQUIRE(p.operations().size() == 5);
  const auto* grid = dynamic_cast<const PatchedGrid*>(p.operations()[1].get());
  REQUIRE(grid != nullptr);
  CHECK(grid->num_patches() == 7);
  CHECK(grid->inner()[1]->static_params().scalar("f_number") == 1.5);

  const std::string unknown = message_of([] { parse_pipeline_config(R"({"operations": [{"name": "Beamform"}]})"); },
                                         ErrorKind::config);
  CHECK(unknown.find("Beamform") != std::string::npos);
  for (const auto& name : known_operations()) CHECK(unknown.find(name) != std::string::npos);

  message_of([] { parse_pipeline_config(R"({"operations": [{"name": "Normalize", "colour": 1}]})"); },
             ErrorKind::config);
  message_of([] { parse_pipeline_config("not json"); }, ErrorKind::config);
  message_of([] { parse_pipeline_config(R"({"operations": [{"name": "Normalize", "num_patches": 2}]})"); },
             ErrorKind::config);
  message_of([] { load_pipeline_config("/nonexistent/pipeline.json"); }, ErrorKind::io);
}

TEST_CASE("scan conversion as a pipeline stage") {
  OperationOptions o;
  o.params.set("order", 2.0);
  o.params.set("out_shape", std::vector<double>{40.0, 50.0});
  Pipeline p({std::make_shared<ScanConvert>(o)});
  RealTensor polar({Axis::frame, Axis::rho, Axis::theta}, {1, 16, 16}, 2.0);
  const ParameterBag bag{{"rho_range", ParameterBag::Pair{0.0, 1.0}},
                         {"theta_range", ParameterBag::Pair{-0.78, 0.78}}};
  const RealTensor out = as_real(p(polar, bag));
  CHECK(out.shape() == std::vector<std::size_t>{1, 40, 50});
}
