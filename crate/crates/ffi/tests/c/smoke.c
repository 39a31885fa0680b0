#include <stdio.h>
#include <string.h>
#include "implang.h"

static ptrdiff_t respond(void *user, const char *prompt, char *reply, size_t cap) {
    int *calls = (int *)user;
    (void)prompt;
    (*calls)++;
    const char *text = "sepka";
    size_t n = strlen(text);
    if (n >= cap) return -1;
    memcpy(reply, text, n + 1);
    return (ptrdiff_t)n;
}

int main(int argc, char **argv) {
    if (argc < 2) return 10;
    ImplangRun *run = NULL;
    if (implang_run_new("morphology", "3R6E", "scripted:host", 0, 0, 0, argv[1], NULL, &run) != IMPLANG_STATUS_OK)
        return 11;
    int calls = 0;
    if (implang_run_execute_with(run, respond, &calls) != IMPLANG_STATUS_OK) return 12;
    char *json = NULL;
    if (implang_run_metrics_json(run, &json) != IMPLANG_STATUS_OK) return 13;
    printf("%d %s\n", calls, json);
    implang_string_free(json);
    implang_run_free(run);
    if (implang_run_new("morphology", "nope", "baseline:random", 0, 0, 0, argv[1], NULL, &run) != IMPLANG_STATUS_CONFIG)
        return 14;
    if (strlen(implang_last_error()) == 0) return 15;
    return 0;
}
