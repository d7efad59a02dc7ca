#include <catch2/catch_amalgamated.hpp>

#include "pushgraph/dataset.hpp"
#include "pushgraph/generators.hpp"

#include <cstdio>
#include <filesystem>
#include <set>

using namespace pushgraph;

TEST_CASE("multiple parts: deterministic, right cardinalities, joints present") {
  GeneratorConfig cfg;
  cfg.pushes = 2;
  Scene a = generate_multiple_parts(5, 9, cfg);
  Scene b = generate_multiple_parts(5, 9, cfg);
  REQUIRE(dataset::scene_to_json(a).dump() == dataset::scene_to_json(b).dump());

  int robots = 0, objects = 0;
  for (const auto& o : a.objects) (o.is_robot ? robots : objects)++;
  REQUIRE(robots == 1);
  REQUIRE(objects == 9);
  REQUIRE(!a.joints.empty());
  REQUIRE(a.script.size() == 2);
}

TEST_CASE("multiple parts: scan many scenes for joint coverage and validity") {
  GeneratorConfig cfg;
  cfg.pushes = 1;
  std::set<JointType> seen;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Scene s = generate_multiple_parts(seed, 5, cfg);
    REQUIRE(s.joints.size() >= 1);
    for (const auto& j : s.joints) {
      seen.insert(j.type);
      REQUIRE(j.type != JointType::NoJoint);
    }
    // no initial interpenetration between unjointed pairs
    REQUIRE(measure_residuals(s).max_penetration < 1e-6);
  }
  REQUIRE(seen.count(JointType::Fixed) == 1);
  REQUIRE(seen.count(JointType::Revolute) == 1);
  REQUIRE(seen.count(JointType::Prismatic) == 1);
}

TEST_CASE("different masses: intervals respected, cylinders only") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Scene s = generate_different_masses(seed, 6);
    for (const auto& o : s.objects) {
      if (o.is_robot) continue;
      REQUIRE(o.shape.kind == ShapeKind::Cylinder);
      const bool light = o.mass >= 0.2 && o.mass <= 0.5;
      const bool normal = o.mass >= 1.0 && o.mass <= 2.0;
      const bool heavy = o.mass >= 8.0 && o.mass <= 10.0;
      REQUIRE((light || normal || heavy));
    }
    REQUIRE(s.script.size() == 3);
  }
}

TEST_CASE("trajectory datasets round-trip through JSONL exactly") {
  GeneratorConfig cfg;
  cfg.pushes = 1;
  std::vector<Trajectory> trs;
  for (std::uint64_t seed = 0; seed < 3; ++seed)
    trs.push_back(make_trajectory(generate_multiple_parts(seed, 4, cfg), "multiple-parts", seed));

  const auto path = std::filesystem::temp_directory_path() / "pg_test_ds.jsonl";
  save_trajectories(path.string(), trs);
  auto loaded = load_trajectories(path.string());
  REQUIRE(loaded.size() == trs.size());
  for (size_t i = 0; i < trs.size(); ++i) {
    REQUIRE(dataset::trajectory_to_json(loaded[i]).dump() ==
            dataset::trajectory_to_json(trs[i]).dump());
  }
  std::filesystem::remove(path);

  REQUIRE_THROWS_AS(load_trajectories("/nonexistent/nowhere.jsonl"), IoError);
}

TEST_CASE("scene snapshots expose the upcoming control") {
  GeneratorConfig cfg;
  cfg.pushes = 1;
  auto tr = make_trajectory(generate_multiple_parts(2, 4, cfg), "mp", 2);
  // find a pushing step
  int t = -1;
  for (int k = 0; k < tr.num_steps(); ++k)
    if (!tr.controls[k].teleport && (tr.controls[k].ux != 0 || tr.controls[k].uy != 0)) {
      t = k;
      break;
    }
  REQUIRE(t >= 0);
  Scene s = tr.scene_at(t);
  const auto& r = s.objects[s.robot_index()];
  REQUIRE(r.ux == tr.controls[t].ux);
  REQUIRE(r.uy == tr.controls[t].uy);
  // past the last control the command is zero
  Scene end = tr.scene_at(tr.num_steps());
  const auto& re = end.objects[end.robot_index()];
  REQUIRE(re.ux == 0.0);
  REQUIRE(re.uy == 0.0);
}
