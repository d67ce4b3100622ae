from fastapi import APIRouter

from app.api.routes.admin import router as admin_router
from app.api.routes.attributes import router as attributes_router
from app.api.routes.envelope import router as envelope_router
from app.api.routes.keys import router as keys_router
from app.api.routes.params import router as params_router
from app.api.routes.policies import router as policies_router
from app.api.routes.requests import router as requests_router

api_router = APIRouter()

api_router.include_router(params_router, prefix="/params", tags=["params"])
api_router.include_router(keys_router, prefix="/keys", tags=["keys"])
api_router.include_router(policies_router, prefix="/policies", tags=["policies"])
api_router.include_router(requests_router, prefix="/requests", tags=["requests"])
api_router.include_router(attributes_router, prefix="/attributes", tags=["attributes"])
api_router.include_router(admin_router, prefix="/admin", tags=["admin"])
api_router.include_router(envelope_router, prefix="/envelope", tags=["envelope"])
