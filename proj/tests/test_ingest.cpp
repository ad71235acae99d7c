#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "cuprof/ingest.hpp"
#include "doctest.h"

using namespace cuprof;

namespace {

// Proleptic Gregorian day count (Hinnant's algorithm), used as an
// independent calendar oracle.
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

long long year_from_days(long long z) {
  z += 719468;
  const long long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long long y = static_cast<long long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return y + (m <= 2);
}

RawEventRecord make_event(EventKind kind, std::int64_t epoch_seconds, std::string path = "C:/a.exe") {
  RawEventRecord r;
  r.kind = kind;
  r.pid = 42;
  r.exe_path = std::move(path);
  r.timestamp_filetime = epoch_seconds_to_filetime(epoch_seconds);
  if (kind == EventKind::NetworkEvent) r.net = NetworkInfo{"10.0.0.1", std::string("example.org"), Direction::Outbound};
  return r;
}

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("parse_event_line reads the extractor records") {
    const auto r = parse_event_line("1288|C:/Program Files/Google/Chrome/Application/chrome.exe|132162206271021146|",
                                    EventKind::ProcessEvent);
    CHECK(r.kind == EventKind::ProcessEvent);
    CHECK(r.pid == 1288);
    CHECK(r.exe_path == "C:/Program Files/Google/Chrome/Application/chrome.exe");
    CHECK(r.timestamp_filetime == 132162206271021146ULL);
    CHECK_FALSE(r.net.has_value());

    const auto r2 = parse_event_line("8056|C:/Program Files/AVAST/Application/AvastBrowser.exe|132162207043754581|",
                                     EventKind::ProcessEvent);
    CHECK(r2.pid == 8056);
    CHECK(r2.exe_path == "C:/Program Files/AVAST/Application/AvastBrowser.exe");
    CHECK(r2.timestamp_filetime == 132162207043754581ULL);
  }

  TEST_CASE("parse_event_line error paths") {
    auto code_of = [](std::string_view line, EventKind kind) {
      try {
        parse_event_line(line, kind);
      } catch (const Error& e) {
        return e.code();
      }
      FAIL("expected an error");
      return ErrorCode::FormatError;
    };
    CHECK(code_of("0||132162206271021146|", EventKind::ProcessEvent) == ErrorCode::EmptyPath);
    CHECK(code_of("12|a.exe|132162206271021146", EventKind::ProcessEvent) == ErrorCode::WrongFieldCount);
    CHECK(code_of("12|a.exe|1|2|", EventKind::ProcessEvent) == ErrorCode::WrongFieldCount);
    CHECK(code_of("x12|a.exe|132162206271021146|", EventKind::ProcessEvent) == ErrorCode::NonNumericField);
    CHECK(code_of("12|a.exe|13216220627102114a|", EventKind::ProcessEvent) == ErrorCode::NonNumericField);
    CHECK(code_of("12|a.exe|100|", EventKind::ProcessEvent) == ErrorCode::PreEpochTimestamp);
    CHECK(code_of("12|a.exe|132162206271021146|999.1.1.1|outbound|", EventKind::NetworkEvent) ==
          ErrorCode::MalformedIp);
  }

  TEST_CASE("network and input layouts") {
    const auto n = parse_event_line("9|C:/b.exe|132162206271021146|142.250.1.1|inbound|", EventKind::NetworkEvent);
    REQUIRE(n.net.has_value());
    CHECK(n.net->dst_ip == "142.250.1.1");
    CHECK(n.net->direction == Direction::Inbound);

    const auto c = parse_event_line("9|C:/b.exe|132162206271021146|", EventKind::MouseClick);
    CHECK(c.count == 1);
    const auto k = parse_event_line("9|C:/b.exe|132162206271021146|7|", EventKind::KeystrokeBurst);
    CHECK(k.count == 7);
    CHECK(k.explicit_count);
  }

  TEST_CASE("parse then serialize reproduces accepted lines") {
    std::mt19937_64 rng(7);
    const char* paths[] = {"C:/Program Files/x y/z.exe", "C:\\Windows\\explorer.exe", "/usr/bin/a b", "é.exe"};
    for (int i = 0; i < 500; ++i) {
      std::uniform_int_distribution<std::uint32_t> pid(0, 70000);
      std::uniform_int_distribution<std::uint64_t> ts(kUnixEpochFiletime, kUnixEpochFiletime * 2);
      const int kind = static_cast<int>(rng() % 4);
      std::string line = std::to_string(pid(rng)) + "|" + paths[rng() % 4] + "|" + std::to_string(ts(rng)) + "|";
      if (kind == 1) {
        line += std::to_string(rng() % 256) + "." + std::to_string(rng() % 256) + ".0." + std::to_string(rng() % 256) +
                (rng() % 2 ? "|inbound|" : "|outbound|");
      } else if (kind >= 2 && rng() % 2) {
        line += std::to_string(1 + rng() % 50) + "|";
      }
      const auto rec = parse_event_line(line, static_cast<EventKind>(kind));
      CHECK(serialize_event_line(rec) == line);
    }
  }

  TEST_CASE("filetime conversion") {
    const long long offset_days = days_from_civil(1970, 1, 1) - days_from_civil(1601, 1, 1);
    const unsigned long long oracle = static_cast<unsigned long long>(offset_days) * 86400ULL * 10'000'000ULL;
    CHECK(oracle == kUnixEpochFiletime);

    CHECK(filetime_to_epoch_seconds(116444736000000000ULL) == 0.0);
    CHECK(std::abs(filetime_to_epoch_seconds(116444736000000001ULL) - 1e-7L) <= 1e-15L);

    const long double s = filetime_to_epoch_seconds(132162206271021146ULL);
    CHECK(std::abs(s - 1571747027.1021146L) <= 1e-7L);
    CHECK(year_from_days(static_cast<long long>(s) / 86400) == 2019);

    CHECK_THROWS_AS(filetime_to_epoch_seconds(116444735999999999ULL), Error);
  }

  TEST_CASE("filetime conversion is strictly monotone") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::uint64_t> ts(kUnixEpochFiletime, 140000000000000000ULL);
    for (int i = 0; i < 1000; ++i) {
      const auto a = ts(rng);
      const auto b = a + 1 + rng() % 10;
      CHECK(filetime_to_epoch_seconds(a) < filetime_to_epoch_seconds(b));
    }
  }

  TEST_CASE("resolve_domain") {
    DnsMap dns{{"142.250.1.1", "google.com"}};
    CHECK(resolve_domain("142.250.1.1", dns) == "google.com");
    CHECK(resolve_domain("10.0.0.9", DnsMap{}) == "10.0.0.9");
    CHECK_THROWS_AS(resolve_domain("999.1.1.1", dns), Error);
    CHECK_THROWS_AS(resolve_domain("1.2.3", dns), Error);

    std::istringstream csv("ip,domain\n142.250.1.1,google.com\n1.1.1.1, one.one\n");
    const auto m = read_dns_map(csv);
    CHECK(m.at("1.1.1.1") == "one.one");
  }

  TEST_CASE("background minute from network-only activity") {
    std::vector<RawEventRecord> ev;
    for (int i = 0; i < 3; ++i) ev.push_back(make_event(EventKind::NetworkEvent, 600 + i * 10));
    const auto ds = build_activity_matrix(ev, "u");
    REQUIRE(ds.size() == 1);
    CHECK(ds.minutes[0].background);
    CHECK(ds.minutes[0].domains == std::vector<std::string>{"example.org"});
  }

  TEST_CASE("input events are summed and clear the background flag") {
    std::vector<RawEventRecord> ev{make_event(EventKind::ProcessEvent, 60), make_event(EventKind::MouseClick, 61),
                                   make_event(EventKind::MouseClick, 62), make_event(EventKind::KeystrokeBurst, 63)};
    const auto ds = build_activity_matrix(ev, "u");
    REQUIRE(ds.size() == 1);
    CHECK(ds.minutes[0].clicks == 2);
    CHECK(ds.minutes[0].keystrokes == 1);
    CHECK_FALSE(ds.minutes[0].background);
    // Process-only minutes are not background.
    const auto p = build_activity_matrix(std::vector{make_event(EventKind::ProcessEvent, 0)}, "u");
    CHECK_FALSE(p.minutes[0].background);
  }

  TEST_CASE("activity matrix agrees with a brute-force bucketer") {
    std::mt19937_64 rng(11);
    std::vector<RawEventRecord> ev;
    // 10 events scattered over minutes M and M+2 only, out of order.
    const std::int64_t base = 1'600'000'020;  // start of minute M
    for (int i = 0; i < 10; ++i) {
      const auto kind = static_cast<EventKind>(rng() % 4);
      const std::int64_t sec = base + (i % 2 ? 120 : 0) + static_cast<std::int64_t>(rng() % 60);
      ev.push_back(make_event(kind, sec, i % 3 ? "C:\\A.EXE" : "C:/b.exe"));
    }
    std::shuffle(ev.begin(), ev.end(), rng);

    std::map<long long, std::pair<unsigned, unsigned>> oracle;
    for (const auto& e : ev) {
      const long long minute = static_cast<long long>((e.timestamp_filetime - kUnixEpochFiletime) / 600000000ULL);
      auto& [c, k] = oracle[minute];
      if (e.kind == EventKind::MouseClick) c += e.count;
      if (e.kind == EventKind::KeystrokeBurst) k += e.count;
    }
    const auto ds = build_activity_matrix(ev, "u");
    REQUIRE(oracle.size() == 2);
    REQUIRE(ds.size() == 2);
    std::size_t i = 0;
    for (const auto& [minute, ck] : oracle) {
      CHECK(ds.minutes[i].minute_epoch == minute);
      CHECK(ds.minutes[i].clicks == ck.first);
      CHECK(ds.minutes[i].keystrokes == ck.second);
      ++i;
    }
    for (const auto& m : ds.minutes) {
      std::set<std::string> uniq(m.processes.begin(), m.processes.end());
      CHECK(uniq.size() == m.processes.size());
    }
    CHECK(build_activity_matrix(std::vector<RawEventRecord>{}, "u").empty());
  }

  TEST_CASE("row count and click totals match the events") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<RawEventRecord> ev;
      std::set<long long> minutes;
      unsigned long long clicks = 0;
      for (int i = 0; i < 200; ++i) {
        auto e = make_event(static_cast<EventKind>(rng() % 4), 1'600'000'000 + static_cast<std::int64_t>(rng() % 30000));
        if (e.kind == EventKind::MouseClick) {
          e.count = 1 + static_cast<std::uint32_t>(rng() % 4);
          clicks += e.count;
        }
        minutes.insert(filetime_to_epoch_minute(e.timestamp_filetime));
        ev.push_back(e);
      }
      const auto ds = build_activity_matrix(ev, "u");
      CHECK(ds.size() == minutes.size());
      unsigned long long got = 0;
      for (const auto& m : ds.minutes) got += m.clicks;
      CHECK(got == clicks);
      CHECK_NOTHROW(validate(ds));
    }
  }

  TEST_CASE("process tokens are normalized") {
    CHECK(process_token("C:\\Program Files\\App\\X.EXE") == "c:/program files/app/x.exe");
    CHECK(process_token("a;b") == "a_b");
  }

  TEST_CASE("batch parsing tolerates up to the configured bad fraction") {
    std::string good = "1|a.exe|132162206271021146|\n";
    std::string text;
    for (int i = 0; i < 199; ++i) text += good;
    text += "garbage\n";
    std::istringstream in(text);
    const auto rep = parse_event_log(in, EventKind::ProcessEvent);
    CHECK(rep.records.size() == 199);
    REQUIRE(rep.issues.size() == 1);
    CHECK(rep.issues[0].line_no == 200);
    CHECK(rep.issues[0].code == ErrorCode::WrongFieldCount);

    std::istringstream bad(good + "garbage\n");
    CHECK_THROWS_AS(parse_event_log(bad, EventKind::ProcessEvent), Error);
    std::istringstream lenient(good + "garbage\n");
    CHECK(parse_event_log(lenient, EventKind::ProcessEvent, 0.5).records.size() == 1);
  }

  TEST_CASE("activity csv round trip") {
    UserDataset ds;
    ds.user_id = "u";
    ds.minutes.push_back({100, {"c:/p, q/a.exe", "b.exe"}, {"x.org"}, 0, 0, true});
    ds.minutes.push_back({102, {"b.exe"}, {}, 3, 4, false});
    std::stringstream ss;
    write_activity_csv(ss, ds);
    const auto back = read_activity_csv(ss, "u");
    CHECK(back == ds);
    CHECK(ds.study_day(100) == 1);
    CHECK(ds.study_day(100 + 1440) == 2);
  }
}
