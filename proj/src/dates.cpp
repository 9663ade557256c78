#include "hedgelab/dates.hpp"

#include <cstdio>
#include <stdexcept>

namespace hedgelab {

// Howard Hinnant's civil-calendar algorithms.
Date days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<Date>(era * 146097 + static_cast<int>(doe) - 719468);
}

CivilDate civil_from_days(Date z) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {y + (m <= 2), static_cast<int>(m), static_cast<int>(d)};
}

int year_of(Date d) { return civil_from_days(d).year; }

int weekday_of(Date d) {
    // 1970-01-01 was a Thursday.
    int w = (d + 3) % 7;
    return w < 0 ? w + 7 : w;
}

bool is_weekday(Date d) { return weekday_of(d) < 5; }

Date parse_date(const std::string& iso) {
    int y = 0, m = 0, dd = 0;
    char sep1 = 0, sep2 = 0;
    if (std::sscanf(iso.c_str(), "%d%c%d%c%d", &y, &sep1, &m, &sep2, &dd) != 5 ||
        sep1 != '-' || sep2 != '-' || m < 1 || m > 12 || dd < 1 || dd > 31) {
        throw std::invalid_argument("malformed date: '" + iso + "' (expected YYYY-MM-DD)");
    }
    return days_from_civil(y, m, dd);
}

std::string format_date(Date d) {
    const CivilDate c = civil_from_days(d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", c.year, c.month, c.day);
    return buf;
}

}  // namespace hedgelab
