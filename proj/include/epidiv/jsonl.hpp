#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "epidiv/domain.hpp"

namespace epidiv {

// Keys are emitted in insertion order so checkpoint files are byte-stable.
using Json = nlohmann::ordered_json;

Json to_json(const Topic& topic);
Json to_json(const PromptTemplate& tmpl);
Json to_json(const ResponseRef& ref);
Json to_json(const ResponseRecord& record);
Json to_json(const Claim& claim);
Json to_json(const DiversityReport& report);
Json to_json(const BackendDescriptor& backend);

Topic topic_from_json(const Json& j);
PromptTemplate template_from_json(const Json& j);
ResponseRef response_ref_from_json(const Json& j);
ResponseRecord response_from_json(const Json& j);
Claim claim_from_json(const Json& j);
DiversityReport diversity_report_from_json(const Json& j);
BackendDescriptor backend_from_json(const Json& j);

// Append-only JSONL writer; one object per line, flushed per append so a
// killed run leaves at most one torn line.
class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path, bool append = true);

    void write(const Json& record);
    int64_t lines_written() const { return lines_written_; }

private:
    std::ofstream out_;
    std::filesystem::path path_;
    int64_t lines_written_ = 0;
};

// Reads every line of a JSONL file. A torn trailing line (no newline and
// unparsable) is ignored; any other parse failure throws IoError.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

// Drops a torn trailing line left by a killed writer so appends resume
// on a clean record boundary. Returns true if the file was truncated.
bool repair_jsonl_tail(const std::filesystem::path& path);

void for_each_jsonl(const std::filesystem::path& path, const std::function<void(const Json&)>& fn);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);
void write_json_file(const std::filesystem::path& path, const Json& value);
Json read_json_file(const std::filesystem::path& path);

}  // namespace epidiv
