#pragma once

#include <optional>
#include <string_view>

namespace ctxd::detail {

/// Raw contents of resources/prompts/<name>.txt, compiled into the binary.
std::optional<std::string_view> find_prompt_resource(std::string_view name);

}  // namespace ctxd::detail
