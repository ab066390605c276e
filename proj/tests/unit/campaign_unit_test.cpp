// Copyright 2026 The atomics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <filesystem>
#include <random>
#include <cstring>
#include <set>

#include <gtest/gtest.h>

#include "atomics/campaign/campaign.hpp"
#include "atomics/campaign/layout.hpp"
#include "atomics/campaign/persist.hpp"
#include "test_util.hpp"

namespace atomics::campaign {
namespace {

const std::filesystem::path kFixture = std::filesystem::path(ATOMICS_DATA_DIR) / "layouts/eight_devices.json";

std::string layout_text(const std::string& devices) {
  return R"({"chiplet": "C", "extent": [1000, 2000], "facets": {"left": 0, "right": 1000}, "devices": [)" +
         devices + "]}";
}

TEST(Layout, FixtureHasEightDevicesInTwoColumns) {
  const ChipLayout l = load_layout(kFixture);
  ASSERT_EQ(l.devices.size(), 8u);
  std::set<double> columns;
  for (const auto& d : l.devices) {
    columns.insert(d.input.x);
    columns.insert(d.output.x);
  }
  EXPECT_EQ(columns, (std::set<double>{0.0, 1000.0}));
}

TEST(Layout, DuplicateIdRejected) {
  const std::string d = R"({"id": "A", "input": [0, 10], "output": [1000, 10]})";
  EXPECT_ERROR_CODE(parse_layout(layout_text(d + "," + d)), ErrorCode::ValidationError);
}

TEST(Layout, OutOfExtentRejected) {
  EXPECT_ERROR_CODE(parse_layout(layout_text(R"({"id": "A", "input": [0, 2100], "output": [1000, 10]})")),
                    ErrorCode::ValidationError);
  EXPECT_ERROR_CODE(parse_layout(layout_text(R"({"id": "A", "input": [0, -1], "output": [1000, 10]})")),
                    ErrorCode::ValidationError);
}

TEST(Layout, CouplersMustSitOnTheirFacets) {
  EXPECT_ERROR_CODE(parse_layout(layout_text(R"({"id": "A", "input": [5, 10], "output": [1000, 10]})")),
                    ErrorCode::ValidationError);
  EXPECT_ERROR_CODE(parse_layout(layout_text(R"({"id": "A", "input": [1000, 10], "output": [0, 10]})")),
                    ErrorCode::ValidationError);
}

TEST(Layout, SyntaxErrorNamesTheLine) {
  try {
    parse_layout("{\n  \"chiplet\": \"C\",\n  \"extent\": [1000 2000]\n}");
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Layout, TypeErrorNamesTheField) {
  try {
    parse_layout(layout_text(R"({"id": "A", "input": [0, "ten"], "output": [1000, 10]})"));
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("devices[0].input[1]"), std::string::npos) << e.what();
  }
  EXPECT_ERROR_CODE(parse_layout(R"({"chiplet": "C", "extent": [1, 1], "facets": {"left": 0, "right": 1}})"),
                    ErrorCode::ParseError);
}

TEST(Layout, RandomLayoutsRoundTripAndSortColumnMajor) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    ChipLayout l;
    l.chiplet = "R" + std::to_string(trial);
    l.extent = {500.0 + 1000 * u(gen), 500.0 + 2000 * u(gen)};
    l.left_facet = 0.0;
    l.right_facet = l.extent.x;
    const int n = static_cast<int>(u(gen) * 12);
    for (int i = 0; i < n; ++i) {
      const double y = l.extent.y * u(gen);
      l.devices.push_back({"d" + std::to_string(i), {0.0, y}, {l.extent.x, l.extent.y * u(gen)}, ""});
    }
    const ChipLayout back = parse_layout(l.to_json().dump());
    EXPECT_EQ(back.to_json(), l.to_json());
    const auto order = column_major(back);
    ASSERT_EQ(order.size(), l.devices.size());
    EXPECT_TRUE(std::is_sorted(order.begin(), order.end(), [](const auto& a, const auto& b) {
      return a.input.x < b.input.x || (a.input.x == b.input.x && a.input.y < b.input.y);
    }));
  }
}

TEST(Persist, Sha256KnownVectors) {
  // FIPS 180-2 examples.
  EXPECT_EQ(sha256_hex({'a', 'b', 'c'}), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex({}), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Persist, ColumnsRoundTrip) {
  hal::DaqTrace t;
  t.columns = {"a", "b", "c"};
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n;
  t.data.assign(3, std::vector<double>(257));
  for (auto& c : t.data)
    for (double& v : c) v = n(gen);
  const auto bytes = encode_columns(t);
  EXPECT_EQ(bytes.size(), 3u * 257 * 8);
  const hal::DaqTrace back = decode_columns(bytes, t.columns);
  EXPECT_EQ(back.data, t.data);
  // Column-major: the second column starts right after the first.
  double first_of_b;
  std::memcpy(&first_of_b, bytes.data() + 257 * 8, 8);
  EXPECT_EQ(first_of_b, t.data[1][0]);
  EXPECT_ERROR_CODE(decode_columns({1, 2, 3}, t.columns), ErrorCode::ValidationError);
}

TEST(Persist, WriterRunsJobsInOrder) {
  Writer w;
  std::vector<int> seen;
  for (int i = 0; i < 100; ++i) w.submit([&seen, i] { seen.push_back(i); });
  w.drain();
  ASSERT_EQ(seen.size(), 100u);
  EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
}

TEST(Persist, StoredDatasetHashMatchesFile) {
  const auto dir = std::filesystem::temp_directory_path() / "atomics_persist_test";
  std::filesystem::remove_all(dir);
  hal::DaqTrace t;
  t.columns = {"time_s", "volts"};
  t.data = {{0.0, 0.001, 0.002}, {1.0, 2.0, 3.0}};
  const DatasetRef ref = store_dataset(dir, "x", t, {{"acquisition", {{"kind", "Oscilloscope"}}}});
  EXPECT_EQ(ref.path, "datasets/x.bin");
  EXPECT_EQ(ref.rows, 3u);
  EXPECT_EQ(ref.kind, hal::DaqKind::Oscilloscope);
  EXPECT_EQ(sha256_file(dir / ref.path), ref.sha256);
  const auto sidecar = nlohmann::json::parse(read_file(dir / "datasets/x.json"));
  EXPECT_EQ(sidecar["sha256"], ref.sha256);
  EXPECT_EQ(sidecar["rows"], 3);
  DeviceReport d;
  d.acquisitions = {ref};
  EXPECT_TRUE(datasets_intact(dir, d));
  write_atomic(dir / ref.path, std::string("tampered"));
  EXPECT_FALSE(datasets_intact(dir, d));
  std::filesystem::remove_all(dir);
}

CampaignReport sample_report() {
  CampaignReport r;
  r.chiplet = "C";
  r.started = "2026-01-01T00:00:00Z";
  DeviceReport a;
  a.device_id = "A";
  a.attempted = a.coupled = true;
  a.insertion_loss_db = 6.02;
  a.samples_used = 170;
  a.align_duration_s = 40.5;
  a.acquisitions.push_back({"datasets/A.bin", std::string(64, 'f'), hal::DaqKind::Oscilloscope, {"t", "v"}, 1000});
  a.environment.temperature_setpoint = 295.0;
  DeviceReport b;
  b.device_id = "B";
  b.attempted = true;
  b.error = "DetectionLost: coupler not found";
  r.devices = {a, b};
  return r;
}

TEST(Report, RoundTrips) {
  const CampaignReport r = sample_report();
  const nlohmann::json j = r.to_json();
  EXPECT_EQ(j["schema"], kReportSchema);
  EXPECT_EQ(j["summary"]["coupled"], 1);
  EXPECT_FALSE(j["devices"][1].contains("insertion_loss_db"));
  EXPECT_EQ(CampaignReport::from_json(j).to_json(), j);
}

TEST(Report, SchemaViolationsRejected) {
  const nlohmann::json good = sample_report().to_json();
  auto broken = [&](auto mutate) {
    nlohmann::json j = good;
    mutate(j);
    return j;
  };
  using J = nlohmann::json;
  EXPECT_ERROR_CODE(CampaignReport::from_json(broken([](J& j) { j["schema"] = "other"; })), ErrorCode::ValidationError);
  EXPECT_ERROR_CODE(CampaignReport::from_json(broken([](J& j) { j["devices"][0].erase("insertion_loss_db"); })),
                    ErrorCode::ValidationError);
  EXPECT_ERROR_CODE(CampaignReport::from_json(broken([](J& j) { j["devices"][1]["insertion_loss_db"] = 3.0; })),
                    ErrorCode::ValidationError);
  EXPECT_ERROR_CODE(CampaignReport::from_json(broken([](J& j) { j["devices"][1]["device_id"] = "A"; })),
                    ErrorCode::ValidationError);
  EXPECT_ERROR_CODE(CampaignReport::from_json(broken([](J& j) { j["devices"][0].erase("environment"); })),
                    ErrorCode::ValidationError);
  EXPECT_ERROR_CODE(CampaignReport::from_json(broken([](J& j) { j["summary"]["coupled"] = 2; })),
                    ErrorCode::ValidationError);
  EXPECT_ERROR_CODE(CampaignReport::from_json(broken([](J& j) { j["devices"][0]["samples_used"] = -1; })),
                    ErrorCode::ValidationError);
}

TEST(AcquisitionSpecJson, ParsesAndRejects) {
  const AcquisitionSpec s = AcquisitionSpec::from_json(
      {{"kind", "FrequencyCounter"}, {"duration", 10.0}, {"parameters", {{"gate_s", 1.0}}}});
  EXPECT_EQ(s.kind, hal::DaqKind::FrequencyCounter);
  EXPECT_EQ(s.parameters.at("gate_s"), 1.0);
  EXPECT_EQ(AcquisitionSpec::from_json(s.to_json()).to_json(), s.to_json());
  EXPECT_ERROR_CODE(AcquisitionSpec::from_json({{"kind", "Toaster"}, {"duration", 1.0}}), ErrorCode::MalformedConfig);
  EXPECT_ERROR_CODE(AcquisitionSpec::from_json({{"kind", "GenericDaq"}, {"duration", 0.0}}), ErrorCode::MalformedConfig);
}

}  // namespace
}  // namespace atomics::campaign
