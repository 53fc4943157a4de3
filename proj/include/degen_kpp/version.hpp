#pragma once

namespace degen_kpp {

inline constexpr const char* version = "0.1.0";
/// Version of the JSON report layout.
inline constexpr const char* report_schema = "degen-kpp-report/1";

}  // namespace degen_kpp
