/** Form wiring and the page's status machine.
 *
 * States: idle → loading → ok | degraded | error. Results stay on screen
 * only in ok/degraded; the degraded banner shows exactly when the response
 * says degraded. The submit button is enabled only for a non-blank wish
 * with no request in flight.
 */
import { ApiRequestError } from "./api.js";
import { clearResults, renderResults } from "./view.js";
export function bindElements(root) {
    const byId = (id) => {
        const node = root.getElementById(id);
        if (!node) {
            throw new Error(`missing #${id} in page markup`);
        }
        return node;
    };
    return {
        form: byId("wish-form"),
        wish: byId("wish-input"),
        k: byId("k-select"),
        validate: byId("validate-toggle"),
        submit: byId("submit-button"),
        status: byId("status"),
        banner: byId("degraded-banner"),
        results: byId("results"),
        corpusMeta: byId("corpus-meta"),
    };
}
const K_MAX = 20;
const K_DEFAULT = 5;
const IDLE_MESSAGE = "Enter a goal to find matching 30-day challenges.";
export function initApp(elements, client) {
    let inFlight = false;
    for (let k = 1; k <= K_MAX; k += 1) {
        const option = document.createElement("option");
        option.value = String(k);
        option.textContent = String(k);
        elements.k.append(option);
    }
    elements.k.value = String(K_DEFAULT);
    function setStatus(state, message) {
        elements.status.dataset.state = state;
        elements.status.textContent = message;
    }
    function setBanner(visible) {
        elements.banner.hidden = !visible;
    }
    function syncSubmit() {
        elements.submit.disabled = inFlight || elements.wish.value.trim() === "";
    }
    async function run() {
        const wish = elements.wish.value.trim();
        if (wish === "" || inFlight) {
            return;
        }
        inFlight = true;
        syncSubmit();
        setBanner(false);
        setStatus("loading", "Searching…");
        try {
            const response = await client.search(wish, Number(elements.k.value), elements.validate.checked);
            renderResults(elements.results, response);
            setBanner(response.degraded);
            const count = response.results.length;
            const summary = `${count} result${count === 1 ? "" : "s"} for “${response.query}”`;
            if (response.degraded) {
                setStatus("degraded", `${summary} — served degraded`);
            }
            else {
                setStatus("ok", summary);
            }
        }
        catch (error) {
            clearResults(elements.results);
            setBanner(false);
            const message = error instanceof ApiRequestError ? error.message : "search failed — is the API up?";
            setStatus("error", message);
        }
        finally {
            inFlight = false;
            syncSubmit();
        }
    }
    elements.wish.addEventListener("input", syncSubmit);
    elements.form.addEventListener("submit", (event) => {
        event.preventDefault();
        void run();
    });
    setStatus("idle", IDLE_MESSAGE);
    syncSubmit();
    const ready = client
        .health()
        .then((health) => {
        elements.corpusMeta.textContent = `${health.corpus_size} challenges · ${health.provider_tag}`;
    })
        .catch(() => {
        elements.corpusMeta.textContent = "service unreachable";
    });
    return { submit: run, ready };
}
