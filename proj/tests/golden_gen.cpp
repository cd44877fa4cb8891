// Regenerates the golden artifacts under tests/golden/. Run from the build
// tree after an intentional format change, then review the diff.

#include <fstream>
#include <iostream>

#include "support/golden_cases.hpp"

int main() {
  const auto write = [](const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    std::cout << "wrote " << path << "\n";
  };
  write(testsupport::golden_path("payloads.json"),
        testsupport::golden_payload_doc().dump(2) + "\n");
  write(testsupport::golden_path("report_small.json"), testsupport::golden_report_text());
  write(testsupport::golden_path("report_small_table.txt"), testsupport::golden_table_text());
  write(testsupport::golden_path("trace_i1_ignore_full.json"),
        testsupport::golden_trace_text());
  return 0;
}
