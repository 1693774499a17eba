#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Run {
  int rc = -1;
  std::string out;
};

Run zlens(const std::string& args, const fs::path& cwd = fs::temp_directory_path()) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" ZLENS_BIN "' " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  return files;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("zlens_cli_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    ASSERT_EQ(zlens("fixtures --out " + fx().string()).rc, 0);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static fs::path fx() { return root_ / "fx"; }
  static std::string f(const std::string& rel) { return (fx() / rel).string(); }
  static fs::path out(const std::string& name) { return root_ / name; }

  std::string placement_args(const std::string& which) {
    return " --geometry " + f("placement.geometry") + " --extents " + f(which + "/extents.txt") + " --segments " +
           f(which + "/segments.txt") + " --main-start 16MiB";
  }

  static fs::path root_;
};

fs::path Cli::root_;

}  // namespace

TEST_F(Cli, HelpDocumentsEveryFlag) {
  const std::map<std::string, std::vector<std::string>> flags = {
      {"fiemap", {"--out", "--geometry", "--extents"}},
      {"segmap", {"--out", "--geometry", "--extents", "--segments", "--main-start", "--image"}},
      {"imap", {"--out", "--geometry", "--image", "--nid", "--manifest"}},
      {"trace-report", {"--out", "--geometry", "--trace", "--window", "--scale", "--columns"}},
      {"timeline", {"--out", "--geometry", "--trace", "--series", "--filter-trivial", "--width"}},
      {"check",
       {"--out", "--geometry", "--trace", "--extents", "--segments", "--series", "--thresholds", "--rules",
        "--main-start", "--image"}},
      {"simulate", {"--out", "--geometry", "--script"}},
      {"fixtures", {"--out"}},
  };
  auto top = zlens("--help");
  EXPECT_EQ(top.rc, 0);
  EXPECT_NE(top.out.find("ZLENS_LOG"), std::string::npos);
  for (const auto& [cmd, expected] : flags) {
    EXPECT_NE(top.out.find(cmd), std::string::npos) << cmd;
    auto help = zlens(cmd + " --help");
    EXPECT_EQ(help.rc, 0) << cmd;
    for (const auto& flag : expected) EXPECT_NE(help.out.find(flag + " "), std::string::npos) << cmd << " " << flag;
    // Every documented long option is one we expect.
    std::istringstream lines(help.out);
    std::string line;
    while (std::getline(lines, line)) {
      auto pos = line.find("--");
      if (pos == std::string::npos || line.find("-h,--help") != std::string::npos) continue;
      if (line.compare(0, 2, "  ") != 0 || line.find_first_not_of(' ') != pos) continue;
      const std::string name = line.substr(pos, line.find_first_of(" \t", pos) - pos);
      EXPECT_NE(std::find(expected.begin(), expected.end(), name), expected.end()) << cmd << " documents " << name;
    }
  }
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(zlens("").rc, 2);
  EXPECT_EQ(zlens("no-such-command").rc, 2);
  EXPECT_EQ(zlens("fiemap --out " + out("u1").string()).rc, 2);
  EXPECT_EQ(zlens("fiemap --out x --geometry /nonexistent/geo --extents /nonexistent/ext").rc, 2);
  EXPECT_EQ(zlens("check --out " + out("u2").string() + " --geometry " + f("placement.geometry")).rc, 2);
  EXPECT_EQ(zlens("check --out " + out("u3").string() + " --geometry " + f("placement.geometry") + " --rules R3 --trace " +
                  f("clean/trace.jsonl"))
                .rc,
            2);
  EXPECT_EQ(zlens("segmap --out x --main-start 1MiB --image " + f("f2fs/image.img") + placement_args("clean")).rc, 2);
  EXPECT_FALSE(fs::exists(out("u1")));
}

TEST_F(Cli, IntegrityErrorsExitOne) {
  std::ofstream(out("bad.jsonl")) << "{\"ts_ns\": \"x\"}\n";
  EXPECT_EQ(zlens("trace-report --out " + out("i1").string() + " --geometry " + f("reset_skew/device.geometry") +
                  " --trace " + out("bad.jsonl").string())
                .rc,
            1);
  std::ofstream(out("junk.img")) << std::string(16384, 'x');
  EXPECT_EQ(zlens("imap --out " + out("i2").string() + " --geometry " + f("f2fs/device.geometry") + " --image " +
                  out("junk.img").string() + " --nid 3")
                .rc,
            1);
}

TEST_F(Cli, CheckCleanFixtureHasNoFindings) {
  auto r = zlens("check --out " + out("clean").string() + " --rules R2,R5" + placement_args("clean") + " --trace " +
                 f("clean/trace.jsonl"));
  EXPECT_EQ(r.rc, 0);
  EXPECT_EQ(slurp(out("clean") / "reports.jsonl"), "");

  // With every rule the inputs allow, only the R4 "no reset activity" INFO remains.
  auto all = zlens("check --out " + out("clean_all").string() + placement_args("clean") + " --trace " +
                   f("clean/trace.jsonl"));
  EXPECT_EQ(all.rc, 0);
  const auto reports = slurp(out("clean_all") / "reports.jsonl");
  EXPECT_EQ(reports.find("VIOLATION"), std::string::npos);
  EXPECT_EQ(reports.find("WARN"), std::string::npos);
}

TEST_F(Cli, CheckFooterFixtureExitsThree) {
  auto r = zlens("check --out " + out("footer").string() + placement_args("footer") + " --trace " +
                 f("footer/trace.jsonl"));
  EXPECT_EQ(r.rc, 3);
  const auto reports = slurp(out("footer") / "reports.jsonl");
  std::size_t r2 = 0;
  for (std::size_t p = reports.find("R2_GROUPING"); p != std::string::npos; p = reports.find("R2_GROUPING", p + 1))
    ++r2;
  EXPECT_EQ(r2, 1u);
  EXPECT_NE(reports.find("\"pattern\":\"FOOTER\""), std::string::npos);
}

TEST_F(Cli, TraceReportHeatmapArgmaxIsZoneTwo) {
  auto r = zlens("trace-report --out " + out("tr").string() + " --geometry " + f("reset_skew/device.geometry") +
                 " --trace " + f("reset_skew/trace.jsonl"));
  ASSERT_EQ(r.rc, 0);
  std::istringstream csv(slurp(out("tr") / "heatmap.csv"));
  std::string line;
  std::getline(csv, line);
  uint64_t best = 0, best_zone = 0;
  while (std::getline(csv, line)) {
    const auto comma = line.find(',');
    const uint64_t v = std::stoull(line.substr(comma + 1));
    if (v > best) best = v, best_zone = std::stoull(line.substr(0, comma));
  }
  EXPECT_EQ(best_zone, 2u);
  EXPECT_NE(slurp(out("tr") / "heatmap.svg").find("data-zone=\"2\" data-resets=\"40\" data-step=\"8\""),
            std::string::npos);
}

TEST_F(Cli, ManifestListsEveryArtifact) {
  ASSERT_EQ(zlens("timeline --out " + out("tl").string() + " --geometry " + f("placement.geometry") + " --trace " +
                  f("lsm/trace.jsonl"))
                .rc,
            0);
  auto files = tree(out("tl"));
  std::istringstream manifest(files.at("MANIFEST"));
  std::string name;
  uint64_t size;
  std::size_t listed = 0;
  while (manifest >> name >> size) {
    ASSERT_TRUE(files.contains(name)) << name;
    EXPECT_EQ(files.at(name).size(), size) << name;
    ++listed;
  }
  EXPECT_EQ(listed, files.size() - 1);
}

TEST_F(Cli, WritesOnlyIntoRunDir) {
  const fs::path cwd = out("cwd");
  fs::create_directories(cwd);
  const auto before = tree(fx());
  ASSERT_EQ(zlens("check --out run" + placement_args("footer") + " --trace " + f("footer/trace.jsonl"), cwd).rc, 3);
  ASSERT_EQ(zlens("imap --out run2 --geometry " + f("f2fs/device.geometry") + " --image " + f("f2fs/image.img") +
                      " --manifest " + f("f2fs/manifest.txt"),
                  cwd)
                .rc,
            0);
  std::set<std::string> top;
  for (const auto& e : fs::directory_iterator(cwd)) top.insert(e.path().filename().string());
  EXPECT_EQ(top, (std::set<std::string>{"run", "run2"}));
  EXPECT_EQ(tree(fx()), before);
}

TEST_F(Cli, SimulateRoundTrip) {
  std::ofstream(out("geo")) << "zone_size=1MiB\nnr_zones=4\nmax_open_zones=2\n";
  std::ofstream(out("script")) << "1 write 0 64KiB\n2 reset 0 0\n3 write 1MiB 4KiB\n";
  auto r = zlens("simulate --out " + out("sim").string() + " --geometry " + out("geo").string() + " --script " +
                 out("script").string());
  ASSERT_EQ(r.rc, 0);
  const auto state = slurp(out("sim") / "final_state.csv");
  EXPECT_NE(state.find("0,EMPTY,0,1\n"), std::string::npos) << state;
  EXPECT_NE(state.find("1,IMPLICIT_OPEN,1052672,0\n"), std::string::npos) << state;

  std::ofstream(out("bad_script")) << "1 write 4KiB 4KiB\n";
  EXPECT_EQ(zlens("simulate --out " + out("sim2").string() + " --geometry " + out("geo").string() + " --script " +
                  out("bad_script").string())
                .rc,
            1);
}
