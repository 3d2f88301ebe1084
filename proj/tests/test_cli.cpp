#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "hotreplay/bytesio.hpp"

namespace fs = std::filesystem;

namespace {

std::string bin() {
  const char* b = std::getenv("HOTREPLAY_BIN");
  REQUIRE_MESSAGE(b != nullptr, "HOTREPLAY_BIN must point at the CLI binary");
  return b;
}

struct Result {
  int exit_code;
  std::string out;
};

Result sh(const std::string& cmd) {
  std::string full = cmd + " > /tmp/hotreplay_cli_out.txt 2>&1";
  int rc = std::system(full.c_str());
  std::vector<uint8_t> data = hotreplay::read_file("/tmp/hotreplay_cli_out.txt");
  return {WEXITSTATUS(rc), std::string(data.begin(), data.end())};
}

std::string slurp(const std::string& path) {
  std::vector<uint8_t> data = hotreplay::read_file(path);
  return std::string(data.begin(), data.end());
}

struct TempDir {
  std::string path;
  TempDir() {
    path = "/tmp/hotreplay_cli_ws_" + std::to_string(::getpid());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("bench lists the bundled programs") {
  TempDir ws;
  Result r = sh(bin() + " bench --out " + ws.path);
  CHECK(r.exit_code == 0);
  for (const char* name : {"fir", "bubblesort", "fft", "huffman", "crc", "divloop"}) {
    CHECK(r.out.find(name) != std::string::npos);
  }
  CHECK(fs::exists(ws.path + "/benchmarks.json"));
}

TEST_CASE("unknown benchmarks exit with the usage code") {
  TempDir ws;
  Result r = sh(bin() + " search --bench quicksort -K 2 -R 3 --out " + ws.path);
  CHECK(r.exit_code == 2);

  Result r2 = sh(bin() + " definitely-not-a-subcommand");
  CHECK(r2.exit_code != 0);
}

TEST_CASE("capture then replay reuses the snapshot from the workspace") {
  TempDir ws;
  Result cap = sh(bin() + " capture --bench divloop --seed 9 --out " + ws.path);
  CHECK(cap.exit_code == 0);
  CHECK(fs::exists(ws.path + "/divloop/snapshot.hrsn"));
  CHECK(fs::exists(ws.path + "/divloop/capture.json"));
  CHECK(fs::exists(ws.path + "/divloop/image.hrim"));

  Result rep = sh(bin() + " replay --bench divloop --seed 9 --reps 3 --noise off --out " + ws.path);
  CHECK(rep.exit_code == 0);
  CHECK(rep.out.find("no snapshot") == std::string::npos);  // reused, not recaptured
  CHECK(fs::exists(ws.path + "/divloop/replays.jsonl"));

  Result var = sh(bin() + " replay --bench divloop --seed 9 --reps 1 --noise off --set " +
                  std::string("fast-helper-substitution=on --out ") + ws.path);
  CHECK(var.exit_code == 0);
}

TEST_CASE("profile prints a per-function table") {
  TempDir ws;
  Result r = sh(bin() + " profile --bench fir --out " + ws.path);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("fir_apply") != std::string::npos);
  CHECK(fs::exists(ws.path + "/fir/profile.json"));
}

TEST_CASE("search writes the report bundle and reruns identically") {
  TempDir ws1, ws2;
  std::string args = " search --bench divloop -K 4 -R 3 --seed 5 --agreement 2";
  Result a = sh(bin() + args + " --workers 2 --out " + ws1.path);
  CHECK(a.exit_code == 0);
  for (const char* f : {"report.json", "replays.jsonl", "speedups.csv", "agreement.csv",
                        "overhead.csv", "storage.csv", "replays_per_exec.csv"}) {
    CHECK(fs::exists(ws1.path + "/divloop/" + f));
  }

  Result b = sh(bin() + args + " --workers 1 --out " + ws2.path);
  CHECK(b.exit_code == 0);
  CHECK(slurp(ws1.path + "/divloop/report.json") == slurp(ws2.path + "/divloop/report.json"));
  CHECK(slurp(ws1.path + "/divloop/replays.jsonl") == slurp(ws2.path + "/divloop/replays.jsonl"));
}

TEST_CASE("report regenerates the CSVs from the JSON alone") {
  TempDir ws;
  Result a = sh(bin() + " search --bench divloop -K 3 -R 3 --seed 7 --agreement 1 --out " + ws.path);
  REQUIRE(a.exit_code == 0);
  fs::create_directories(ws.path + "/regen");
  Result r = sh(bin() + " report " + ws.path + "/divloop/report.json --out " + ws.path + "/regen");
  CHECK(r.exit_code == 0);
  for (const char* f : {"speedups.csv", "agreement.csv", "overhead.csv", "storage.csv",
                        "replays_per_exec.csv"}) {
    CHECK(slurp(ws.path + "/regen/" + std::string(f)) ==
          slurp(ws.path + "/divloop/" + std::string(f)));
  }

  std::string head = slurp(ws.path + "/regen/speedups.csv");
  CHECK(head.rfind("benchmark,variant,status,cycles,mean_time,speedup", 0) == 0);
}

TEST_CASE("the workspace environment variable is honored") {
  TempDir ws;
  Result r = sh("HOTREPLAY_WORKSPACE=" + ws.path + " " + bin() + " bench");
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(ws.path + "/benchmarks.json"));
}
