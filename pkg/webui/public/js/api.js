/** Typed client for the challenge-search HTTP API. */
export class ApiRequestError extends Error {
    constructor(message, status, errorType) {
        super(message);
        this.status = status;
        this.errorType = errorType;
        this.name = "ApiRequestError";
    }
}
async function parsePayload(response) {
    try {
        return await response.json();
    }
    catch {
        return undefined;
    }
}
function raiseFor(response, payload) {
    const body = (payload ?? {});
    throw new ApiRequestError(body.error?.message ?? `request failed with status ${response.status}`, response.status, body.error?.type ?? "unknown");
}
export function createApiClient(options = {}) {
    const baseUrl = (options.baseUrl ?? "").replace(/\/+$/, "");
    const fetchImpl = options.fetchImpl ?? ((...args) => fetch(...args));
    async function getJson(path) {
        const response = await fetchImpl(`${baseUrl}${path}`);
        const payload = await parsePayload(response);
        if (!response.ok) {
            raiseFor(response, payload);
        }
        return payload;
    }
    return {
        async search(wish, k, validate) {
            const params = new URLSearchParams({
                q: wish,
                k: String(k),
                validate: String(validate),
            });
            return (await getJson(`/api/search?${params.toString()}`));
        },
        async health() {
            return (await getJson("/api/health"));
        },
    };
}
