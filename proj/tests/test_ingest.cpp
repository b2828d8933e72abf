#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "gbst/flow_io.hpp"
#include "gbst/ingest.hpp"
#include "testutil.hpp"

using namespace gbst;

namespace {

const FlowKey kKeyAB{0x0a000001, 0x0a000002, 40000, 80, 6};

LabelRow label_row(const FlowKey& key, std::int64_t start_us,
                   const std::string& raw) {
  return LabelRow{key, start_us, raw};
}

}  // namespace

TEST_CASE("reconstruct_flows computes the full packet records") {
  testutil::PcapBuilder builder;
  builder.tcp_packet(1'000'000, kKeyAB, 0x02, 64240);           // fwd SYN
  builder.tcp_packet(1'000'400, kKeyAB.reversed(), 0x12, 512);  // bwd SYN+ACK
  builder.tcp_packet(1'001'000, kKeyAB, 0x10, 100, 300);        // fwd ACK
  const CaptureResult capture = parse_capture(builder.bytes());

  const std::vector<LabelRow> labels = {label_row(kKeyAB, 900'000, "BENIGN")};
  const ReconstructResult result =
      reconstruct_flows(capture.events, labels);

  REQUIRE(result.flows.size() == 1);
  CHECK(result.matched_packets == 3);
  CHECK(result.unmatched_packets == 0);

  const FlowStream& flow = result.flows[0];
  CHECK(flow.key == kKeyAB);
  CHECK(flow.start_ts_us == 1'000'000);
  CHECK(flow.label == Label::kBenign);
  CHECK(flow.vector_tag == "BENIGN");
  REQUIRE(flow.packets.size() == 3);

  const auto& p = flow.packets;
  CHECK(p[0].is_forward);
  CHECK(!p[1].is_forward);
  CHECK(p[2].is_forward);
  CHECK(p[0].timestamp_rel == 0.0);
  CHECK(p[1].timestamp_rel == doctest::Approx(0.0004));
  CHECK(p[2].timestamp_rel == doctest::Approx(0.001));
  CHECK(p[1].iat_before == p[0].iat_after);
  CHECK(p[0].src_port_enc == 0);  // 40000 > 1023
  CHECK(p[0].dst_port_enc == 80);
  CHECK(p[1].src_port_enc == 80);  // reversed direction
  CHECK(p[1].dst_port_enc == 0);
  // initial windows only on the first packet of each direction
  CHECK(p[0].init_win_bytes == 64240);
  CHECK(p[1].init_win_bytes == 512);
  CHECK(p[2].init_win_bytes == 0);
  CHECK(p[0].is_syn);
  CHECK(p[1].is_syn);
  CHECK(p[1].is_ack);
  CHECK(p[2].is_ack);
}

TEST_CASE("start timestamps disambiguate reused five-tuples") {
  // two sessions with the same key, starting at t=0s and t=60s
  std::vector<PacketEvent> events(2);
  events[0].key = kKeyAB;
  events[0].ts_us = 1'000'000;
  events[0].length = 60;
  events[1].key = kKeyAB;
  events[1].ts_us = 61'000'000;
  events[1].length = 60;

  const std::vector<LabelRow> labels = {
      label_row(kKeyAB, 0, "BENIGN"),
      label_row(kKeyAB, 60'000'000, "Syn"),
  };
  const ReconstructResult result = reconstruct_flows(events, labels);
  REQUIRE(result.flows.size() == 2);
  CHECK(result.flows[0].packets.size() == 1);
  CHECK(result.flows[1].packets.size() == 1);
  CHECK(result.flows[0].label == Label::kBenign);
  CHECK(result.flows[1].label == Label::kAttack);
  CHECK(result.flows[1].vector_tag == "Syn");
}

TEST_CASE("packets before the earliest session start are unmatched") {
  std::vector<PacketEvent> events(1);
  events[0].key = kKeyAB;
  events[0].ts_us = 500;
  events[0].length = 60;
  const std::vector<LabelRow> labels = {label_row(kKeyAB, 1'000, "BENIGN")};
  const ReconstructResult result = reconstruct_flows(events, labels);
  CHECK(result.flows.empty());
  CHECK(result.unmatched_packets == 1);
}

TEST_CASE("events with no label row are counted, not fatal") {
  std::vector<PacketEvent> events(1);
  events[0].key = FlowKey{1, 2, 3, 4, 17};
  events[0].ts_us = 1'000;
  const ReconstructResult result = reconstruct_flows(events, {});
  CHECK(result.flows.empty());
  CHECK(result.unmatched_packets == 1);
}

TEST_CASE("matched plus unmatched equals the event count") {
  testutil::PcapBuilder builder;
  const FlowKey other{0x0a000009, 0x0a000002, 1111, 53, 17};
  builder.tcp_packet(1'000'000, kKeyAB, 0x02, 100);
  builder.udp_packet(1'100'000, other);
  builder.tcp_packet(1'200'000, kKeyAB.reversed(), 0x10, 200);
  builder.udp_packet(1'900'000, other);
  const CaptureResult capture = parse_capture(builder.bytes());
  REQUIRE(capture.events.size() == 4);

  const std::vector<LabelRow> labels = {label_row(kKeyAB, 0, "BENIGN")};
  const ReconstructResult result = reconstruct_flows(capture.events, labels);
  std::uint64_t in_flows = 0;
  for (const FlowStream& f : result.flows) in_flows += f.packets.size();
  CHECK(in_flows + result.unmatched_packets == capture.events.size());
  CHECK(result.matched_packets == in_flows);
}

TEST_CASE("reconstruction is deterministic") {
  testutil::PcapBuilder builder;
  builder.tcp_packet(1'000'000, kKeyAB, 0x02, 64240);
  builder.tcp_packet(1'000'400, kKeyAB.reversed(), 0x12, 512);
  builder.tcp_packet(1'001'000, kKeyAB, 0x10, 100);
  const CaptureResult capture = parse_capture(builder.bytes());
  const std::vector<LabelRow> labels = {label_row(kKeyAB, 0, "BENIGN")};

  const ReconstructResult a = reconstruct_flows(capture.events, labels);
  const ReconstructResult b = reconstruct_flows(capture.events, labels);
  REQUIRE(a.flows.size() == b.flows.size());
  for (std::size_t i = 0; i < a.flows.size(); ++i) {
    CHECK(flow_to_json_line(a.flows[i]) == flow_to_json_line(b.flows[i]));
  }
}

TEST_CASE("label CSV parsing") {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "gbst_ingest_test";
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = dir / "labels.csv";

  {
    std::ofstream out(path);
    out << "src_ip,dst_ip,src_port,dst_port,protocol,start_ts_us,label\n";
    out << "10.0.0.1,10.0.0.2,40000,80,6,900000,BENIGN\n";
    out << "192.168.1.5,10.0.0.2,1234,53,17,1000,DrDoS_DNS\n";
  }
  const std::vector<LabelRow> rows = read_label_csv(path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].key == kKeyAB);
  CHECK(rows[0].start_ts_us == 900000);
  CHECK(rows[0].raw_label == "BENIGN");
  CHECK(rows[1].key.protocol == 17);
  CHECK(rows[1].raw_label == "DrDoS_DNS");

  SUBCASE("bad header is rejected") {
    std::ofstream out(path);
    out << "ip,ip,port,port,proto,ts,label\n";
    out.close();
    CHECK_THROWS_AS(read_label_csv(path), DataError);
  }

  SUBCASE("bad field is rejected with the line number") {
    std::ofstream out(path);
    out << "src_ip,dst_ip,src_port,dst_port,protocol,start_ts_us,label\n";
    out << "10.0.0.1,10.0.0.2,99999,80,6,900000,BENIGN\n";
    out.close();
    CHECK_THROWS_WITH_AS(read_label_csv(path),
                         doctest::Contains("line 2"), DataError);
  }

  std::filesystem::remove_all(dir);
}

TEST_CASE("balance_split sizes, disjointness and determinism") {
  std::vector<FlowStream> corpus;
  for (int i = 0; i < 120; ++i) {
    FlowStream f = testutil::make_flow(
        {double(40 + i)}, i % 2 == 0 ? Label::kBenign : Label::kAttack);
    f.start_ts_us = i;  // unique marker
    corpus.push_back(std::move(f));
  }

  SplitSpec spec;
  spec.n_train_benign = 20;
  spec.n_train_attack = 20;
  spec.n_val_benign = 10;
  spec.n_val_attack = 10;
  spec.n_test_benign = 25;
  spec.n_test_attack = 25;
  spec.seed = 99;

  const SplitResult split = balance_split(corpus, spec);
  CHECK(split.train.size() == 40);
  CHECK(split.val.size() == 20);
  CHECK(split.test.size() == 50);

  std::set<std::int64_t> seen;
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (const FlowStream& f : *part) {
      CHECK(seen.insert(f.start_ts_us).second);  // disjoint partitions
    }
  }

  const SplitResult again = balance_split(corpus, spec);
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    CHECK(split.train[i].start_ts_us == again.train[i].start_ts_us);
  }

  SUBCASE("zero counts give empty partitions") {
    const SplitResult empty = balance_split(corpus, SplitSpec{});
    CHECK(empty.train.empty());
    CHECK(empty.val.empty());
    CHECK(empty.test.empty());
  }

  SUBCASE("shortfall names the class") {
    spec.n_test_attack = 1000;
    CHECK_THROWS_WITH_AS(balance_split(corpus, spec),
                         doctest::Contains("attack"), DataError);
  }
}

TEST_CASE("volume_report byte model") {
  // counts from a large reference corpus; raw size interpreted as GiB
  const double raw = 163.6 * 1073741824.0;
  const VolumeReport packets = volume_report(0, 248'800'000, raw);
  CHECK(packets.packet_header_bytes == doctest::Approx(9.952e9));
  REQUIRE(packets.packet_portion.has_value());
  CHECK(*packets.packet_portion == doctest::Approx(0.0568).epsilon(0.01));

  const VolumeReport flows = volume_report(50'000'000, 0, raw);
  CHECK(flows.flow_record_bytes == doctest::Approx(7.5e9));
  REQUIRE(flows.flow_portion.has_value());
  CHECK(*flows.flow_portion == doctest::Approx(0.0428).epsilon(0.01));

  const VolumeReport zero = volume_report(0, 0);
  CHECK(zero.flow_record_bytes == 0.0);
  CHECK(zero.packet_header_bytes == 0.0);
  CHECK(!zero.flow_portion.has_value());
}
