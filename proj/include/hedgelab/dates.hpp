#pragma once

#include <cstdint>
#include <string>

namespace hedgelab {

// Dates are civil-day counts since 1970-01-01. All maturity arithmetic is in
// calendar days; trading-day arithmetic is index arithmetic on a sorted date
// axis owned by the caller.
using Date = std::int32_t;

struct CivilDate {
    int year;
    int month;  // 1..12
    int day;    // 1..31
};

Date days_from_civil(int year, int month, int day);
CivilDate civil_from_days(Date d);

int year_of(Date d);

// 0 = Monday .. 6 = Sunday
int weekday_of(Date d);
bool is_weekday(Date d);

// Parses "YYYY-MM-DD". Throws std::invalid_argument on malformed input.
Date parse_date(const std::string& iso);
std::string format_date(Date d);

}  // namespace hedgelab
