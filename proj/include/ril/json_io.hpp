#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ril/mdp.hpp"
#include "ril/sampler.hpp"
#include "ril/solvers.hpp"
#include "ril/transforms.hpp"

namespace ril {

using Json = nlohmann::ordered_json;

/// Nested [s][a][s'] arrays.
Json table_to_json(const Table3& t);
/// Nested [s][a] arrays.
Json table_to_json(const Table2& t);

Json mdp_to_json(const Mdp& m);

/// Throws ParseError listing every violation found. Rows within 1e-9 of a
/// distribution are renormalized to exact sums.
Mdp mdp_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
Mdp load_mdp(const std::filesystem::path& path);

/// Reads a [s][a][s'] table with the shape of m; throws ParseError.
Table3 table3_from_json(const Json& j, std::size_t states, std::size_t actions,
                        const std::string& field);

Json policy_to_json(const Policy& p);
Json value_tables_to_json(const ValueTables& v);
Json action_sets_to_json(const ActionSets& sets);

Json spec_to_json(const TransformSpec& spec);
TransformSpec spec_from_json(const Json& j);
Json chain_to_json(const TransformChain& chain);
TransformChain chain_from_json(const Json& j);

Json sampler_to_json(const MdpSamplerConfig& c);
/// Missing keys keep their defaults.
MdpSamplerConfig sampler_from_json(const Json& j);

} // namespace ril
