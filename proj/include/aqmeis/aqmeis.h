/*
 * C interface to the air-quality information service.
 *
 * Every function returns an aqmeis_status. Strings returned through `char**`
 * out-parameters are heap-allocated, NUL-terminated UTF-8 and must be
 * released with aqmeis_free(). On failure the out-parameter is left NULL
 * and aqmeis_last_error() describes the problem for the calling thread.
 */
#ifndef AQMEIS_H
#define AQMEIS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define AQMEIS_API __attribute__((visibility("default")))
#else
#define AQMEIS_API
#endif

typedef enum aqmeis_status {
  AQMEIS_OK = 0,

  AQMEIS_E_MISALIGNED_TIMESTAMP = 10,
  AQMEIS_E_UNKNOWN_STATION = 11,
  AQMEIS_E_EMPTY_CHANNEL_SET = 12,
  AQMEIS_E_INVERTED_RANGE = 13,
  AQMEIS_E_BAD_CHANNEL_INDEX = 14,

  AQMEIS_E_BAD_HEADER = 20,
  AQMEIS_E_BAD_STATUS_CODE = 21,
  AQMEIS_E_BAD_TIMESTAMP = 22,
  AQMEIS_E_BAD_VALUE = 23,
  AQMEIS_E_DUPLICATE_CHANNEL = 24,
  AQMEIS_E_BAD_SCENARIO = 25,

  AQMEIS_E_NO_CHANNELS_SELECTED = 30,
  AQMEIS_E_NO_DATA_FOR_PERIOD = 31,
  AQMEIS_E_BAD_CSV = 32,

  AQMEIS_E_NEGATIVE_CONCENTRATION = 40,
  AQMEIS_E_INDEX_OUT_OF_SCALE = 41,
  AQMEIS_E_BAD_BREAKPOINT_TABLE = 42,

  AQMEIS_E_BAD_COORDINATES = 50,
  AQMEIS_E_UNKNOWN_MUNICIPALITY = 51,
  AQMEIS_E_UNKNOWN_CATEGORY = 52,
  AQMEIS_E_EMPTY_TITLE = 53,
  AQMEIS_E_DUPLICATE_STREAM = 54,
  AQMEIS_E_REFERENCED_ENTITY = 55,

  AQMEIS_E_UNKNOWN_LOCATION = 60,
  AQMEIS_E_BAD_HOUR = 61,
  AQMEIS_E_MISSING_FILE = 62,
  AQMEIS_E_BAD_FRAME_DATE = 63,
  AQMEIS_E_BAD_FORECAST_FILE = 64,

  AQMEIS_E_BAD_CREDENTIALS = 70,
  AQMEIS_E_DENIED_MISSING = 71,
  AQMEIS_E_DENIED_EXPIRED = 72,
  AQMEIS_E_DENIED_INSUFFICIENT = 73,
  AQMEIS_E_BAD_REQUEST = 74,
  AQMEIS_E_NOT_FOUND = 75,

  AQMEIS_E_CONFIG = 90,
  AQMEIS_E_DATA_DIR = 91,
  AQMEIS_E_IO = 92,
  AQMEIS_E_INVALID_ARGUMENT = 98,
  AQMEIS_E_INTERNAL = 99
} aqmeis_status;

/* Opaque service handle. */
typedef struct aqmeis_system aqmeis_system;

AQMEIS_API const char* aqmeis_version(void);
/* "UnknownStation" etc.; "Unknown" for codes outside the table. */
AQMEIS_API const char* aqmeis_status_name(int status);
/* Message for the last failure on this thread; never NULL. */
AQMEIS_API const char* aqmeis_last_error(void);
AQMEIS_API void aqmeis_free(void* p);

/*
 * Loads `config_path` (NULL for built-in defaults), applies the JSON object
 * `overrides_json` (NULL for none) as a merge patch, then the secret
 * environment variables. Returns AQMEIS_E_CONFIG or AQMEIS_E_DATA_DIR on
 * startup problems.
 */
AQMEIS_API int aqmeis_open(const char* config_path, const char* overrides_json, aqmeis_system** out);
AQMEIS_API void aqmeis_close(aqmeis_system* sys);

/* Validates a config without opening data; effective config as JSON. */
AQMEIS_API int aqmeis_check_config(const char* config_path, const char* overrides_json, char** out_json);
/* Sets the process TZ to the configured zone. Affects the whole process. */
AQMEIS_API int aqmeis_apply_timezone(aqmeis_system* sys);
/* Pins "today" to YYYY-MM-DD; NULL restores the wall clock. */
AQMEIS_API int aqmeis_set_today(aqmeis_system* sys, const char* date);

/* Line-protocol batches. Output: {"batches":[...]} with one entry per batch. */
AQMEIS_API int aqmeis_ingest_text(aqmeis_system* sys, const char* text, size_t len, char** out_json);
AQMEIS_API int aqmeis_ingest_file(aqmeis_system* sys, const char* path, char** out_json);

/*
 * Station simulator. `scenario_json` NULL uses the four default stations
 * starting at `start` (YYYY-MM-DDTHH:MM). Output is the concatenated
 * line-protocol payloads.
 */
AQMEIS_API int aqmeis_simulate(const char* scenario_json, const char* start, uint64_t seed, char** out_payload);

/*
 * Report request object:
 *   {"station":"s001","channels":[5,6],"interval":"60",
 *    "category":"daily|weekly|monthly|custom","from":"...","to":"...","page":1}
 */
AQMEIS_API int aqmeis_report_json(aqmeis_system* sys, const char* request_json, char** out_json);
AQMEIS_API int aqmeis_report_csv(aqmeis_system* sys, const char* request_json, char** out_csv);

AQMEIS_API int aqmeis_markers_xml(aqmeis_system* sys, char** out_xml);
AQMEIS_API int aqmeis_stations_json(aqmeis_system* sys, char** out_json);
/* `date` NULL means today. */
AQMEIS_API int aqmeis_aqi_json(aqmeis_system* sys, const char* station, const char* date, char** out_json);

AQMEIS_API int aqmeis_forecast_import(aqmeis_system* sys, const char* location, const char* csv_path, size_t* out_rows);
AQMEIS_API int aqmeis_forecast_series_json(aqmeis_system* sys, const char* location, const char* parameter,
                                           const char* date, char** out_json);

/*
 * Starts the HTTP API and background ingestion. `host` NULL and `port` < 0
 * take the configured values; port 0 picks a free port. Returns at once.
 */
AQMEIS_API int aqmeis_serve_start(aqmeis_system* sys, const char* host, int port, int* out_port);
AQMEIS_API int aqmeis_serve_stop(aqmeis_system* sys);

#ifdef __cplusplus
}
#endif

#endif /* AQMEIS_H */
