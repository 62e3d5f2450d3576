"""
User-friendly error messages for V2XSentinel.

Maps exception types to localized, helpful error messages in Spanish.
"""

from core.exceptions import (
    V2XSentinelError,
    TrajectoryFormatError,
    TrajectoryGapError,
    InsufficientDataError,
    ParameterError,
    ChannelDomainError,
    ModelVersionError,
    CorruptModelError,
    FilterStateError,
    StreamAlignmentError,
    MissingTruthError,
    ValidationError,
    FileOperationError,
    PipelineStageError,
    UsageError
)


# Error message templates
ERROR_MESSAGES = {
    TrajectoryFormatError: {
        "title": "Error de Formato de Trayectorias",
        "message": "El archivo de trayectorias no tiene el formato esperado.",
        "suggestions": [
            "Las columnas deben ser: frame, vehicle_id, x_m, y_m",
            "Convierta los archivos NGSIM nativos con 'simulate --ngsim'",
            "Verifique que todos los valores sean numéricos"
        ]
    },

    TrajectoryGapError: {
        "title": "Vehículo Ausente",
        "message": "Un vehículo no reporta su posición en todos los frames.",
        "suggestions": [
            "Recorte el rango de frames a un intervalo continuo",
            "Elimine los vehículos con reportes incompletos"
        ]
    },

    InsufficientDataError: {
        "title": "Datos Insuficientes",
        "message": "No hay suficientes datos para realizar esta operación.",
        "suggestions": [
            "Use un escenario con más frames",
            "Consulte la documentación para los requisitos mínimos"
        ]
    },

    ParameterError: {
        "title": "Parámetro Fuera de Rango",
        "message": "Uno de los parámetros está fuera del rango permitido.",
        "suggestions": [
            "Revise los valores mínimos de vehículos y frames",
            "Consulte config/default_config.json como referencia"
        ]
    },

    ChannelDomainError: {
        "title": "Error del Modelo de Canal",
        "message": "El modelo de canal se evaluó fuera de su dominio.",
        "suggestions": [
            "Verifique que transmisor y receptor no estén en la misma posición"
        ]
    },

    ModelVersionError: {
        "title": "Versión de Modelo Incompatible",
        "message": "El archivo de modelo fue generado con otra versión.",
        "suggestions": [
            "Vuelva a entrenar el modelo con 'train'"
        ]
    },

    CorruptModelError: {
        "title": "Modelo Corrupto",
        "message": "No se pudo leer el archivo de modelo.",
        "suggestions": [
            "Verifique que el archivo no esté truncado",
            "Vuelva a entrenar el modelo con 'train'"
        ]
    },

    FilterStateError: {
        "title": "Estado del Filtro Inválido",
        "message": "Un mensaje del filtro o los pesos de las partículas dejaron de sumar 1.",
        "suggestions": [
            "Verifique que el modelo corresponda al escenario",
            "Vuelva a entrenar el modelo con 'train'"
        ]
    },

    StreamAlignmentError: {
        "title": "Flujos Desalineados",
        "message": "Las trayectorias y los grafos no tienen el mismo número de frames.",
        "suggestions": [
            "Genere ambos flujos con el mismo comando 'simulate'"
        ]
    },

    MissingTruthError: {
        "title": "Sin Verdad de Referencia",
        "message": "La serie no contiene las ventanas de ataque reales.",
        "suggestions": [
            "Use series producidas por 'detect' sobre un flujo simulado"
        ]
    },

    ValidationError: {
        "title": "Configuración Inválida",
        "message": "La configuración contiene valores no válidos.",
        "suggestions": [
            "Revise las claves y rangos en el archivo de configuración",
            "Las claves desconocidas no están permitidas"
        ]
    },

    FileOperationError: {
        "title": "Error de Archivo",
        "message": "No se pudo leer o escribir el archivo.",
        "suggestions": [
            "Verifique que el archivo exista y tenga permisos de lectura",
            "Verifique que tenga permisos de escritura en la carpeta destino"
        ]
    },

    PipelineStageError: {
        "title": "Error en el Pipeline",
        "message": "Una etapa del pipeline falló.",
        "suggestions": [
            "Consulte los registros para ver la causa original"
        ]
    },

    UsageError: {
        "title": "Uso Incorrecto",
        "message": "Los argumentos de la línea de comandos no son válidos.",
        "suggestions": [
            "Ejecute 'python main.py --help' para ver el uso"
        ]
    },

    # Generic fallback
    Exception: {
        "title": "Error Inesperado",
        "message": "Ocurrió un error inesperado.",
        "suggestions": [
            "Intente la operación nuevamente",
            "Si el problema persiste, consulte los registros de la aplicación"
        ]
    }
}


def get_error_message(exception: Exception) -> dict:
    """
    Get user-friendly error message for an exception.

    Args:
        exception: The exception that occurred

    Returns:
        Dictionary with title, message, suggestions and the technical detail
    """
    template = ERROR_MESSAGES[Exception]
    for exc_type in type(exception).__mro__:
        if exc_type in ERROR_MESSAGES:
            template = ERROR_MESSAGES[exc_type]
            break

    error_info = {
        "title": template["title"],
        "message": template["message"],
        "suggestions": list(template.get("suggestions", [])),
        "technical": str(exception)
    }

    if isinstance(exception, V2XSentinelError) and exception.message:
        error_info["message"] = exception.message

    return error_info


def format_error_message(error_info: dict, include_suggestions: bool = True) -> str:
    """
    Format error information as plain text for the console.

    Args:
        error_info: Dictionary returned by get_error_message
        include_suggestions: Whether to append the suggestions list

    Returns:
        Formatted multi-line string
    """
    lines = [f"{error_info['title']}: {error_info['message']}"]
    if include_suggestions and error_info.get("suggestions"):
        lines.append("Sugerencias:")
        for suggestion in error_info["suggestions"]:
            lines.append(f"  • {suggestion}")
    return "\n".join(lines)
